#include "vrn/common.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace vrn {

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char raw : text) {
        unsigned char c = static_cast<unsigned char>(raw);
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::string join_tokens(std::span<const std::string> tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

double log_sum_exp(std::span<const double> z) {
    double m = z[0];
    for (double v : z) m = std::max(m, v);
    double s = 0.0;
    for (double v : z) s += std::exp(v - m);
    return m + std::log(s);
}

std::size_t ParamStore::add(std::string name, std::size_t rows, std::size_t cols) {
    if (by_name_.count(name)) throw Error("duplicate parameter block: " + name);
    std::size_t idx = blocks_.size();
    by_name_.emplace(name, idx);
    names_.push_back(std::move(name));
    blocks_.emplace_back(rows, cols);
    return idx;
}

std::size_t ParamStore::index_of(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw Error("unknown parameter block: " + name);
    return it->second;
}

GradientSet::GradientSet(const ParamStore& params) {
    blocks.reserve(params.count());
    for (std::size_t i = 0; i < params.count(); ++i) {
        const Matrix& b = params.block(i);
        blocks.emplace_back(b.rows, b.cols);
    }
}

void GradientSet::zero() {
    for (Matrix& b : blocks) b.zero();
}

GradientSet::NonFinite GradientSet::find_non_finite() const {
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const auto& d = blocks[i].data;
        for (std::size_t j = 0; j < d.size(); ++j) {
            if (!std::isfinite(d[j])) return {true, i, j};
        }
    }
    return {};
}

void GradientSet::add_scaled(const GradientSet& other, double scale) {
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        axpy(scale, {other.blocks[i].data.data(), other.blocks[i].data.size()},
             {blocks[i].data.data(), blocks[i].data.size()});
    }
}

void sgd_step(ParamStore& params, const GradientSet& grads, double lr,
              const std::string& context) {
    auto bad = grads.find_non_finite();
    if (bad.found) {
        std::ostringstream os;
        os << "non-finite gradient in block '" << params.name(bad.block)
           << "' at offset " << bad.offset << " (" << context << ")";
        throw Error(os.str());
    }
    for (std::size_t i = 0; i < params.count(); ++i) {
        axpy(-lr, {grads.blocks[i].data.data(), grads.blocks[i].data.size()},
             {params.block(i).data.data(), params.block(i).data.size()});
    }
}

}  // namespace vrn
