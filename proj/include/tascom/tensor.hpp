#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace tascom {

// Dense row-major array of 64-bit floats. Rank 0-3 is all this project needs.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::size_t rows, std::size_t cols);

    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor full(std::vector<std::size_t> shape, double value);
    static Tensor from(std::vector<std::size_t> shape, std::vector<double> values);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    std::size_t dim(std::size_t i) const { return shape_[i]; }
    std::size_t rows() const { return shape_[0]; }
    std::size_t cols() const { return shape_[1]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

    void fill(double value);
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;
    double max_abs() const;

    std::vector<double>::iterator begin() { return data_.begin(); }
    std::vector<double>::iterator end() { return data_.end(); }
    std::vector<double>::const_iterator begin() const { return data_.begin(); }
    std::vector<double>::const_iterator end() const { return data_.end(); }

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

// c = a * b for 2-D tensors, (m x k) * (k x n) -> (m x n).
Tensor matmul(const Tensor& a, const Tensor& b);
// c = a^T * b, (k x m)^T * (k x n) -> (m x n). Avoids materializing transposes.
Tensor matmul_tn(const Tensor& a, const Tensor& b);
// c = a * b^T, (m x k) * (n x k)^T -> (m x n).
Tensor matmul_nt(const Tensor& a, const Tensor& b);

void add_inplace(Tensor& dst, const Tensor& src);            // dst += src
void axpy(Tensor& dst, double alpha, const Tensor& src);     // dst += alpha*src
void scale_inplace(Tensor& t, double alpha);

// Throws std::invalid_argument naming `what` on shape mismatch.
void require_same_shape(const Tensor& a, const Tensor& b, const std::string& what);
// Throws std::runtime_error naming `what` if any value is non-finite.
void require_finite(const Tensor& t, const std::string& what);

std::string shape_to_string(const std::vector<std::size_t>& shape);

} // namespace tascom
