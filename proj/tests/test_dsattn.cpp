#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "disco/dsattn.hpp"
#include "disco/gradcheck.hpp"

using namespace disco;

namespace {

constexpr int kDim = 8;  // d; chunks are d/2 = 4

Tensor rand_const(std::vector<int> shape, Rng& rng) {
    size_t n = 1;
    for (int e : shape) n *= static_cast<size_t>(e);
    std::vector<double> data(n);
    for (double& v : data) v = rng.uniform(-1.0, 1.0);
    return Tensor::constant(std::move(shape), std::move(data));
}

// Brute-force reference: run the block math by hand on only the unmasked
// rows, in plain doubles.
std::pair<std::vector<double>, std::vector<double>> brute_block(
    const Tensor& q, const Tensor& keys, const Tensor& values, const Tensor& labels,
    const std::vector<uint8_t>& mask, const AttnParams& p) {
    const int half = p.wq.rows(), dim = p.wq.cols();
    std::vector<double> qp(dim, 0.0);
    for (int j = 0; j < dim; ++j)
        for (int i = 0; i < half; ++i) qp[j] += q.at(i) * p.wq.at(i, j);

    std::vector<int> live;
    for (size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) live.push_back(static_cast<int>(i));

    std::vector<double> scores;
    for (const int r : live) {
        std::vector<double> kp(dim, 0.0);
        for (int j = 0; j < dim; ++j)
            for (int i = 0; i < half; ++i) kp[j] += keys.at(r, i) * p.wk.at(i, j);
        double s = 0.0;
        for (int j = 0; j < dim; ++j) s += qp[j] * kp[j];
        scores.push_back(s / std::sqrt(static_cast<double>(dim)));
    }
    double mx = scores[0];
    for (const double s : scores) mx = std::max(mx, s);
    double denom = 0.0;
    std::vector<double> a(scores.size());
    for (size_t i = 0; i < scores.size(); ++i) {
        a[i] = std::exp(scores[i] - mx);
        denom += a[i];
    }
    for (double& v : a) v /= denom;

    std::vector<double> h(dim, 0.0), l(dim, 0.0);
    for (size_t i = 0; i < live.size(); ++i) {
        const int r = live[i];
        std::vector<double> vp(dim, 0.0);
        for (int j = 0; j < dim; ++j)
            for (int c = 0; c < half; ++c) vp[j] += values.at(r, c) * p.wv.at(c, j);
        for (int j = 0; j < dim; ++j) {
            h[j] += a[i] * vp[j];
            l[j] += a[i] * labels.at(r, j);
        }
    }
    return {h, l};
}

}  // namespace

TEST_CASE("attn_block: single unmasked key gets weight 1") {
    Rng rng(1);
    AttnParams p(kDim / 2, kDim, rng);
    Graph g;
    Tensor q = rand_const({kDim / 2}, rng);
    Tensor keys = rand_const({1, kDim / 2}, rng);
    Tensor labels = rand_const({1, kDim}, rng);
    const std::vector<uint8_t> mask = {1};
    AttnOut out = attn_block(g, q, keys, keys, labels, mask, p);

    // H must equal that key's value row after W_V; L' its label row.
    Tensor vp = matmul(g, keys, p.wv);
    for (int j = 0; j < kDim; ++j) {
        CHECK(out.pooled.at(j) == doctest::Approx(vp.at(0, j)).epsilon(1e-12));
        CHECK(out.labels.at(j) == doctest::Approx(labels.at(0, j)).epsilon(1e-12));
    }
}

TEST_CASE("attn_block: two identical key rows split weight evenly") {
    Rng rng(2);
    AttnParams p(kDim / 2, kDim, rng);
    Graph g;
    Tensor q = rand_const({kDim / 2}, rng);
    std::vector<double> row(kDim / 2);
    for (double& v : row) v = rng.uniform(-1, 1);
    std::vector<double> two_rows = row;
    two_rows.insert(two_rows.end(), row.begin(), row.end());
    Tensor keys = Tensor::constant({2, kDim / 2}, two_rows);
    std::vector<double> values(2 * kDim / 2);
    for (double& v : values) v = rng.uniform(-1, 1);
    Tensor vals = Tensor::constant({2, kDim / 2}, values);
    Tensor labels = rand_const({2, kDim}, rng);
    const std::vector<uint8_t> mask = {1, 1};
    AttnOut out = attn_block(g, q, keys, vals, labels, mask, p);

    Tensor vp = matmul(g, vals, p.wv);
    for (int j = 0; j < kDim; ++j)
        CHECK(out.pooled.at(j) ==
              doctest::Approx(0.5 * vp.at(0, j) + 0.5 * vp.at(1, j)).epsilon(1e-12));
}

TEST_CASE("attn_block: masked positions match the brute-force subset run") {
    Rng rng(3);
    for (int trial = 0; trial < 25; ++trial) {
        AttnParams p(kDim / 2, kDim, rng);
        Graph g;
        const int k = 2 + rng.uniform_int(6);
        Tensor q = rand_const({kDim / 2}, rng);
        Tensor keys = rand_const({k, kDim / 2}, rng);
        Tensor vals = rand_const({k, kDim / 2}, rng);
        Tensor labels = rand_const({k, kDim}, rng);
        std::vector<uint8_t> mask(static_cast<size_t>(k));
        bool any = false;
        for (auto& m : mask) {
            m = rng.uniform() < 0.6 ? 1 : 0;
            any = any || m;
        }
        if (!any) mask[0] = 1;

        AttnOut out = attn_block(g, q, keys, vals, labels, mask, p);
        const auto [h, l] = brute_block(q, keys, vals, labels, mask, p);
        for (int j = 0; j < kDim; ++j) {
            CHECK(std::fabs(out.pooled.at(j) - h[static_cast<size_t>(j)]) < 1e-12);
            CHECK(std::fabs(out.labels.at(j) - l[static_cast<size_t>(j)]) < 1e-12);
        }
    }
}

TEST_CASE("attn_block: all-masked history returns zero vectors") {
    Rng rng(4);
    AttnParams p(kDim / 2, kDim, rng);
    Graph g;
    Tensor q = rand_const({kDim / 2}, rng);
    Tensor keys = rand_const({3, kDim / 2}, rng);
    Tensor labels = rand_const({3, kDim}, rng);
    AttnOut out = attn_block(g, q, keys, keys, labels, {0, 0, 0}, p);
    for (int j = 0; j < kDim; ++j) {
        CHECK(out.pooled.at(j) == 0.0);
        CHECK(out.labels.at(j) == 0.0);
    }
}

TEST_CASE("attn_block: shape errors") {
    Rng rng(5);
    AttnParams p(kDim / 2, kDim, rng);
    Graph g;
    Tensor q_bad = rand_const({kDim}, rng);
    Tensor keys = rand_const({3, kDim / 2}, rng);
    Tensor labels = rand_const({3, kDim}, rng);
    CHECK_THROWS_AS(attn_block(g, q_bad, keys, keys, labels, {1, 1, 1}, p),
                    std::invalid_argument);
    Tensor q = rand_const({kDim / 2}, rng);
    CHECK_THROWS_AS(attn_block(g, q, keys, keys, labels, {1, 1}, p), std::invalid_argument);
}

TEST_CASE("attention weights are invariant to a shared key shift") {
    Rng rng(6);
    AttnParams p(kDim / 2, kDim, rng);
    const int k = 5;
    Tensor q = rand_const({kDim / 2}, rng);
    Tensor keys = rand_const({k, kDim / 2}, rng);
    Tensor vals = rand_const({k, kDim / 2}, rng);
    Tensor labels = rand_const({k, kDim}, rng);
    const std::vector<uint8_t> mask(k, 1);

    std::vector<double> c(kDim / 2);
    for (double& v : c) v = rng.uniform(-2, 2);
    std::vector<double> shifted = keys.data();
    for (int r = 0; r < k; ++r)
        for (int j = 0; j < kDim / 2; ++j)
            shifted[static_cast<size_t>(r) * (kDim / 2) + j] += c[static_cast<size_t>(j)];
    Tensor keys2 = Tensor::constant({k, kDim / 2}, shifted);

    Graph g;
    AttnOut a = attn_block(g, q, keys, vals, labels, mask, p);
    AttnOut b = attn_block(g, q, keys2, vals, labels, mask, p);
    // Same values and labels with every key score shifted by the same amount:
    // the softmax (hence H and L') must not move.
    for (int j = 0; j < kDim; ++j) {
        CHECK(std::fabs(a.pooled.at(j) - b.pooled.at(j)) < 1e-9);
        CHECK(std::fabs(a.labels.at(j) - b.labels.at(j)) < 1e-9);
    }
}

TEST_CASE("intra patterns: single history item with label 1") {
    Rng rng(7);
    DsAttnParams params(kDim, rng);
    Graph g;
    ChunkedItem cand{rand_const({kDim / 2}, rng), rand_const({kDim / 2}, rng),
                     rand_const({kDim / 2}, rng), rand_const({kDim / 2}, rng)};
    HistoryChunks hist{rand_const({1, kDim / 2}, rng), rand_const({1, kDim / 2}, rng),
                       rand_const({1, kDim / 2}, rng), rand_const({1, kDim / 2}, rng)};
    Tensor phi_y1 = rand_const({1, kDim}, rng);  // stands in for the label row
    const std::vector<uint8_t> mask = {1};
    auto [ss, tt] = intra_patterns(g, cand, hist, phi_y1, mask, params.ss, params.tt);
    for (int j = 0; j < kDim; ++j) {
        CHECK(ss.labels.at(j) == doctest::Approx(phi_y1.at(0, j)).epsilon(1e-12));
        CHECK(tt.labels.at(j) == doctest::Approx(phi_y1.at(0, j)).epsilon(1e-12));
    }
}

TEST_CASE("pattern vector shapes are 2d and fully masked histories are zero") {
    Rng rng(8);
    DsAttnParams params(kDim, rng);
    Graph g;
    ChunkedItem cand{rand_const({kDim / 2}, rng), rand_const({kDim / 2}, rng),
                     rand_const({kDim / 2}, rng), rand_const({kDim / 2}, rng)};
    const int k = 30;
    HistoryChunks hist{rand_const({k, kDim / 2}, rng), rand_const({k, kDim / 2}, rng),
                       rand_const({k, kDim / 2}, rng), rand_const({k, kDim / 2}, rng)};
    Tensor labels = rand_const({k, kDim}, rng);

    PatternVectors pv =
        dsattn_forward(g, cand, hist, labels, std::vector<uint8_t>(k, 1), params);
    CHECK(pv.p_ss.size() == 2 * kDim);
    CHECK(pv.p_tt.size() == 2 * kDim);
    CHECK(pv.p_ts.size() == 2 * kDim);
    CHECK(pv.p_st.size() == 2 * kDim);

    PatternVectors zero =
        dsattn_forward(g, cand, hist, labels, std::vector<uint8_t>(k, 0), params);
    for (const Tensor* t : {&zero.p_ss, &zero.p_tt, &zero.p_ts, &zero.p_st})
        for (const double v : t->data()) CHECK(v == 0.0);
}

TEST_CASE("inter patterns: equal chunks and tied weights coincide") {
    Rng rng(9);
    AttnParams shared(kDim / 2, kDim, rng);
    Graph g;
    Tensor c_shared = rand_const({kDim / 2}, rng);
    ChunkedItem cand{rand_const({kDim / 2}, rng), c_shared, rand_const({kDim / 2}, rng),
                     c_shared};
    Tensor h_shared = rand_const({4, kDim / 2}, rng);
    HistoryChunks hist{rand_const({4, kDim / 2}, rng), h_shared, rand_const({4, kDim / 2}, rng),
                       h_shared};
    Tensor labels = rand_const({4, kDim}, rng);
    const std::vector<uint8_t> mask = {1, 1, 0, 1};
    auto [st, ts] = inter_patterns(g, cand, hist, labels, mask, shared, shared);
    for (int j = 0; j < kDim; ++j) {
        CHECK(st.pooled.at(j) == doctest::Approx(ts.pooled.at(j)).epsilon(1e-12));
        CHECK(st.labels.at(j) == doctest::Approx(ts.labels.at(j)).epsilon(1e-12));
    }
}

TEST_CASE("P_ST ignores the intra chunks entirely") {
    Rng rng(10);
    DsAttnParams params(kDim, rng);
    Tensor labels = rand_const({4, kDim}, rng);
    const std::vector<uint8_t> mask = {1, 1, 1, 1};

    ChunkedItem cand{rand_const({kDim / 2}, rng), rand_const({kDim / 2}, rng),
                     rand_const({kDim / 2}, rng), rand_const({kDim / 2}, rng)};
    HistoryChunks hist{rand_const({4, kDim / 2}, rng), rand_const({4, kDim / 2}, rng),
                       rand_const({4, kDim / 2}, rng), rand_const({4, kDim / 2}, rng)};

    Graph g;
    auto [st1, ts1] = inter_patterns(g, cand, hist, labels, mask, params.st, params.ts);

    ChunkedItem cand2 = cand;
    cand2.s_intra = Tensor::zeros({kDim / 2});
    cand2.t_intra = Tensor::zeros({kDim / 2});
    HistoryChunks hist2 = hist;
    hist2.s_intra = Tensor::zeros({4, kDim / 2});
    hist2.t_intra = Tensor::zeros({4, kDim / 2});
    auto [st2, ts2] = inter_patterns(g, cand2, hist2, labels, mask, params.st, params.ts);

    CHECK(st1.pooled.data() == st2.pooled.data());
    CHECK(ts1.pooled.data() == ts2.pooled.data());
}

TEST_CASE("the four blocks have disjoint parameters and isolated gradients") {
    Rng rng(11);
    DsAttnParams params(kDim, rng);
    NamedParams named;
    params.collect(named);
    CHECK(named.size() == 12);
    for (size_t i = 0; i < named.size(); ++i)
        for (size_t j = i + 1; j < named.size(); ++j)
            CHECK(named[i].second.id() != named[j].second.id());

    // A loss touching only P_TT moves only theta_TT.
    Graph g;
    ChunkedItem cand{rand_const({kDim / 2}, rng), rand_const({kDim / 2}, rng),
                     rand_const({kDim / 2}, rng), rand_const({kDim / 2}, rng)};
    HistoryChunks hist{rand_const({3, kDim / 2}, rng), rand_const({3, kDim / 2}, rng),
                       rand_const({3, kDim / 2}, rng), rand_const({3, kDim / 2}, rng)};
    Tensor labels = rand_const({3, kDim}, rng);
    PatternVectors pv =
        dsattn_forward(g, cand, hist, labels, std::vector<uint8_t>{1, 1, 1}, params);
    Tensor loss = dot(g, pv.p_tt, pv.p_tt);
    g.backward(loss);

    const auto grad_norm = [](const Tensor& t) {
        double s = 0;
        for (const double v : t.grad()) s += v * v;
        return s;
    };
    CHECK(grad_norm(params.tt.wq) > 0.0);
    CHECK(grad_norm(params.ss.wq) == 0.0);
    CHECK(grad_norm(params.st.wq) == 0.0);
    CHECK(grad_norm(params.ts.wq) == 0.0);
}

TEST_CASE("full DS-Attn gradients pass finite differences") {
    Rng rng(12);
    DsAttnParams params(kDim, rng);
    NamedParams named;
    params.collect(named);
    std::vector<Tensor> ps;
    for (auto& [name, t] : named) ps.push_back(t);

    ChunkedItem cand{rand_const({kDim / 2}, rng), rand_const({kDim / 2}, rng),
                     rand_const({kDim / 2}, rng), rand_const({kDim / 2}, rng)};
    HistoryChunks hist{rand_const({4, kDim / 2}, rng), rand_const({4, kDim / 2}, rng),
                       rand_const({4, kDim / 2}, rng), rand_const({4, kDim / 2}, rng)};
    Tensor labels = rand_const({4, kDim}, rng);
    const std::vector<uint8_t> mask = {0, 1, 1, 1};

    const double err = finite_diff_check(ps, [&](Graph& g) {
        PatternVectors pv = dsattn_forward(g, cand, hist, labels, mask, params);
        const std::vector<Tensor> all = {pv.p_tt, pv.p_ss, pv.p_ts, pv.p_st};
        Tensor cat = concat(g, all);
        return dot(g, cat, cat);
    });
    CHECK(err < 1e-4);
}
