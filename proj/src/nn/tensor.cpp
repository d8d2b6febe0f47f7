#include "rlb/nn/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "rlb/error.hpp"

namespace rlb::nn {

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) throw ContractViolation("tensor data length != rows*cols");
}

Tensor Tensor::row(std::vector<double> values) {
  const auto n = values.size();
  return Tensor(1, n, std::move(values));
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::add_(const Tensor& o) {
  if (!same_shape(o)) throw ContractViolation("tensor shape mismatch in add_");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::check_finite(const std::string& what) const {
  if (!all_finite()) throw NumericError("non-finite value produced by " + what);
}

namespace {

void prepare(Tensor& out, std::size_t r, std::size_t c, bool accumulate) {
  if (accumulate) {
    if (out.rows() != r || out.cols() != c) throw ContractViolation("gemm accumulate shape");
  } else if (out.rows() != r || out.cols() != c) {
    out = Tensor(r, c);
  } else {
    out.fill(0.0);
  }
}

}  // namespace

void gemm(const Tensor& a, const Tensor& b, Tensor& out, bool accumulate) {
  if (a.cols() != b.rows()) throw ContractViolation("gemm shape mismatch");
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  prepare(out, n, m, accumulate);
  const double* A = a.data();
  const double* B = b.data();
  double* C = out.data();
  for (std::size_t i = 0; i < n; ++i) {
    double* c_row = C + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A[i * k + p];
      if (av == 0.0) continue;
      const double* b_row = B + p * m;
      for (std::size_t j = 0; j < m; ++j) c_row[j] += av * b_row[j];
    }
  }
}

void gemm_tn(const Tensor& a, const Tensor& b, Tensor& out, bool accumulate) {
  if (a.rows() != b.rows()) throw ContractViolation("gemm_tn shape mismatch");
  const std::size_t n = a.cols(), k = a.rows(), m = b.cols();
  prepare(out, n, m, accumulate);
  const double* A = a.data();
  const double* B = b.data();
  double* C = out.data();
  for (std::size_t p = 0; p < k; ++p) {
    const double* a_row = A + p * n;
    const double* b_row = B + p * m;
    for (std::size_t i = 0; i < n; ++i) {
      const double av = a_row[i];
      if (av == 0.0) continue;
      double* c_row = C + i * m;
      for (std::size_t j = 0; j < m; ++j) c_row[j] += av * b_row[j];
    }
  }
}

void gemm_nt(const Tensor& a, const Tensor& b, Tensor& out, bool accumulate) {
  if (a.cols() != b.cols()) throw ContractViolation("gemm_nt shape mismatch");
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  prepare(out, n, m, accumulate);
  const double* A = a.data();
  const double* B = b.data();
  double* C = out.data();
  for (std::size_t i = 0; i < n; ++i) {
    const double* a_row = A + i * k;
    for (std::size_t j = 0; j < m; ++j) {
      const double* b_row = B + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a_row[p] * b_row[p];
      C[i * m + j] += s;
    }
  }
}

}  // namespace rlb::nn
