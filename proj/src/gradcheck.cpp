#include "disco/gradcheck.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace disco {

double finite_diff_check(std::span<Tensor> params, const std::function<Tensor(Graph&)>& f,
                         double h) {
    if (h <= 0.0) throw std::invalid_argument("finite_diff_check: h must be positive");

    const auto eval = [&]() {
        Graph g;
        return f(g).value();
    };

    const double base1 = eval();
    const double base2 = eval();
    if (base1 != base2)
        throw std::runtime_error("finite_diff_check: f is not deterministic");

    for (Tensor& p : params) p.zero_grad();
    std::vector<std::vector<double>> analytic;
    {
        Graph g;
        Tensor loss = f(g);
        g.backward(loss);
        for (const Tensor& p : params) analytic.push_back(p.grad());
    }

    double max_rel = 0.0;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& p = params[pi];
        for (size_t i = 0; i < p.size(); ++i) {
            const double saved = p.data()[i];
            p.data()[i] = saved + h;
            const double fp = eval();
            p.data()[i] = saved - h;
            const double fm = eval();
            p.data()[i] = saved;
            const double central = (fp - fm) / (2.0 * h);
            const double rel =
                std::fabs(analytic[pi][i] - central) / std::max(1.0, std::fabs(central));
            if (rel > max_rel) max_rel = rel;
        }
    }
    return max_rel;
}

}  // namespace disco
