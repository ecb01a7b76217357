#include "disco/csv.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace disco {

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open csv file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();

    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool row_started = false;

    const auto end_field = [&]() {
        row.push_back(std::move(field));
        field.clear();
    };
    const auto end_row = [&]() {
        end_field();
        rows.push_back(std::move(row));
        row.clear();
        row_started = false;
    };

    for (size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                in_quotes = true;
                row_started = true;
                break;
            case ',':
                end_field();
                row_started = true;
                break;
            case '\r':
                break;
            case '\n':
                if (row_started || !field.empty() || !row.empty()) end_row();
                break;
            default:
                field += c;
                row_started = true;
                break;
        }
    }
    if (in_quotes) throw std::runtime_error("unterminated quote in csv file: " + path);
    if (row_started || !field.empty() || !row.empty()) end_row();
    return rows;
}

void write_csv_row(std::ostream& os, std::span<const std::string> fields) {
    for (size_t i = 0; i < fields.size(); ++i) {
        if (i) os << ',';
        const std::string& f = fields[i];
        if (f.find_first_of(",\"\n\r") != std::string::npos) {
            os << '"';
            for (const char c : f) {
                if (c == '"') os << "\"\"";
                else os << c;
            }
            os << '"';
        } else {
            os << f;
        }
    }
    os << '\n';
}

}  // namespace disco
