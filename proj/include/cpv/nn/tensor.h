#pragma once

#include <cstddef>
#include <functional>
#include <new>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cpv::nn {

class ShapeError : public std::invalid_argument {
 public:
    using std::invalid_argument::invalid_argument;
};

using Shape = std::vector<int>;

std::string shape_string(const Shape& s);

inline std::size_t shape_size(const Shape& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1},
                           [](std::size_t acc, int d) { return acc * static_cast<std::size_t>(d); });
}

// Fixed 64-byte alignment keeps vectorised reductions independent of where
// the heap places a buffer, so repeated runs are bitwise identical.
template <typename T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t kAlign{64};

    AlignedAllocator() = default;
    template <typename U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

    template <typename U>
    friend bool operator==(const AlignedAllocator&, const AlignedAllocator<U>&) { return true; }
};

// Dense row-major tensor that owns its storage.
template <typename T>
class Tensor {
 public:
    Tensor() = default;
    explicit Tensor(Shape shape, T fill = T(0)) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {
        for (int d : shape_)
            if (d < 0) throw ShapeError("negative dimension in " + shape_string(shape_));
    }
    Tensor(Shape shape, std::span<const T> data) : shape_(std::move(shape)), data_(data.begin(), data.end()) {
        if (data_.size() != shape_size(shape_))
            throw ShapeError("data length " + std::to_string(data_.size()) + " does not match " + shape_string(shape_));
    }

    const Shape& shape() const { return shape_; }
    int dim(std::size_t i) const { return shape_.at(i); }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::span<T> values() { return data_; }
    std::span<const T> values() const { return data_; }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
    void reshape(Shape s) {
        if (shape_size(s) != data_.size()) throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(s));
        shape_ = std::move(s);
    }

    template <typename U>
    Tensor<U> cast() const {
        std::vector<U> out(data_.begin(), data_.end());
        return Tensor<U>(shape_, std::span<const U>(out));
    }

    friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
    Shape shape_;
    std::vector<T, AlignedAllocator<T>> data_;
};

// Learnable tensor plus its gradient accumulator.
template <typename T>
struct Parameter {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;

    Parameter() = default;
    Parameter(std::string n, Shape shape) : name(std::move(n)), value(shape), grad(std::move(shape)) {}
};

}  // namespace cpv::nn
