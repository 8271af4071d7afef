#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ndmd {

template <class T>
using MatX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using VecX = Eigen::Matrix<T, Eigen::Dynamic, 1>;

using cplx = std::complex<double>;

// Contract violations in data or file inputs. The CLI maps these to exit
// code 2; programming errors keep using std::logic_error / assertions.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed on-disk artifact; carries the byte offset of the first
// inconsistency so tooling can point at it.
class FormatError : public DataError {
public:
    FormatError(const std::string& msg, std::size_t offset)
        : DataError(msg + " (byte offset " + std::to_string(offset) + ")"),
          byte_offset(offset) {}
    std::size_t byte_offset;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw DataError(msg);
}

}  // namespace ndmd
