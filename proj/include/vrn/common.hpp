#pragma once
// Shared numeric and text primitives: dense matrices, named parameter
// blocks with mirrored gradient storage, and the tokenizer used for
// questions and entity names alike.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace vrn {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Lowercase, map punctuation to spaces, split on whitespace.
std::vector<std::string> tokenize(std::string_view text);
std::string join_tokens(std::span<const std::string> tokens);

// Row-major dense matrix of doubles. A vector is a 1 x n or n x 1 matrix;
// embedding tables are rows x dim.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }
    std::span<double> row_span(std::size_t r) { return {row(r), cols}; }
    std::span<const double> row_span(std::size_t r) const { return {row(r), cols}; }
    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::size_t size() const { return data.size(); }
    void zero() { std::fill(data.begin(), data.end(), 0.0); }

    bool operator==(const Matrix& o) const = default;
};

double dot(std::span<const double> a, std::span<const double> b);
// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);

// log(sum_i exp(z_i)), stabilized.
double log_sum_exp(std::span<const double> z);

// Ordered collection of named parameter blocks. Block order is fixed at
// construction and shared with GradientSet, which mirrors the shapes.
class ParamStore {
public:
    std::size_t add(std::string name, std::size_t rows, std::size_t cols);
    std::size_t count() const { return blocks_.size(); }
    Matrix& block(std::size_t idx) { return blocks_[idx]; }
    const Matrix& block(std::size_t idx) const { return blocks_[idx]; }
    const std::string& name(std::size_t idx) const { return names_[idx]; }
    std::size_t index_of(const std::string& name) const;
    bool has(const std::string& name) const { return by_name_.count(name) > 0; }

private:
    std::vector<std::string> names_;
    std::vector<Matrix> blocks_;
    std::unordered_map<std::string, std::size_t> by_name_;
};

struct GradientSet {
    std::vector<Matrix> blocks;

    explicit GradientSet(const ParamStore& params);
    void zero();
    Matrix& block(std::size_t idx) { return blocks[idx]; }
    const Matrix& block(std::size_t idx) const { return blocks[idx]; }
    // Returns the block index and flat element offset of the first
    // non-finite entry, or nullopt-style {false, 0, 0}.
    struct NonFinite {
        bool found = false;
        std::size_t block = 0;
        std::size_t offset = 0;
    };
    NonFinite find_non_finite() const;
    void add_scaled(const GradientSet& other, double scale);
};

// params -= lr * grads, after a non-finite guard.
// context is prepended to the diagnostic on failure.
void sgd_step(ParamStore& params, const GradientSet& grads, double lr,
              const std::string& context);

}  // namespace vrn
