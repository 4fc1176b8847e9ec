#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "pact/core.hpp"

namespace pact {

/// Row-compressed sparse matrix. For the forward operator, row r corresponds
/// to (detector r / nt, time sample r % nt); `ordering_nt` records nt so a
/// loaded file can be checked against the geometry it is used with.
class SparseOperator {
public:
    SparseOperator() = default;
    SparseOperator(std::size_t rows, std::size_t cols, std::vector<std::uint64_t> row_ptr,
                   std::vector<std::uint32_t> col_idx, std::vector<double> weights,
                   std::size_t ordering_nt = 0)
        : rows_(rows), cols_(cols), row_ptr_(std::move(row_ptr)), col_(std::move(col_idx)),
          w_(std::move(weights)), ordering_nt_(ordering_nt) {
        require_size(row_ptr_.size(), rows_ + 1, "SparseOperator row_ptr");
        require_size(col_.size(), w_.size(), "SparseOperator columns/weights");
        if (row_ptr_.back() != w_.size()) throw ContractViolation("SparseOperator: row_ptr does not end at nnz");
        for (std::uint32_t c : col_)
            if (c >= cols_) throw ContractViolation("SparseOperator: column index out of range");
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t nnz() const { return w_.size(); }
    std::size_t ordering_nt() const { return ordering_nt_; }

    std::span<const std::uint64_t> row_ptr() const { return row_ptr_; }
    std::span<const std::uint32_t> col_idx() const { return col_; }
    std::span<const double> weights() const { return w_; }

    void apply(std::span<const double> u, std::span<double> out) const {
        require_size(u.size(), cols_, "SparseOperator::apply input");
        require_size(out.size(), rows_, "SparseOperator::apply output");
        for (std::size_t r = 0; r < rows_; ++r) {
            double s = 0.0;
            for (std::uint64_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) s += w_[k] * u[col_[k]];
            out[r] = s;
        }
    }

    void apply_adjoint(std::span<const double> q, std::span<double> out) const {
        require_size(q.size(), rows_, "SparseOperator::apply_adjoint input");
        require_size(out.size(), cols_, "SparseOperator::apply_adjoint output");
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t r = 0; r < rows_; ++r) {
            const double v = q[r];
            if (v == 0.0) continue;
            for (std::uint64_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) out[col_[k]] += w_[k] * v;
        }
    }

    std::vector<double> apply(std::span<const double> u) const {
        std::vector<double> out(rows_);
        apply(u, out);
        return out;
    }
    std::vector<double> apply_adjoint(std::span<const double> q) const {
        std::vector<double> out(cols_);
        apply_adjoint(q, out);
        return out;
    }

    friend bool operator==(const SparseOperator&, const SparseOperator&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::uint64_t> row_ptr_{0};
    std::vector<std::uint32_t> col_;
    std::vector<double> w_;
    std::size_t ordering_nt_ = 0;
};

// ---------------------------------------------------------------------------
// Binary cache layout (little-endian):
//   char[8]   magic "PACTSPK1"
//   u32       format version (1)
//   u32       ordering tag (1 = detector-major rows, r = d*nt + k)
//   u64       rows, cols, nnz, ordering_nt
//   u64[rows+1] row_ptr
//   u32[nnz]  column indices
//   f64[nnz]  weights

namespace detail {

inline constexpr char kOperatorMagic[8] = {'P', 'A', 'C', 'T', 'S', 'P', 'K', '1'};
inline constexpr std::uint32_t kOperatorVersion = 1;
inline constexpr std::uint32_t kDetectorMajor = 1;

template <class T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
void read_pod(std::istream& is, T& v) {
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
}
template <class T>
void write_array(std::ostream& os, const std::vector<T>& v) {
    os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
}
template <class T>
void read_array(std::istream& is, std::vector<T>& v, std::size_t n) {
    v.resize(n);
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
}

}  // namespace detail

inline void save_operator(const std::string& path, const SparseOperator& K) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open operator file for writing: " + path);
    os.write(detail::kOperatorMagic, 8);
    detail::write_pod(os, detail::kOperatorVersion);
    detail::write_pod(os, detail::kDetectorMajor);
    detail::write_pod(os, static_cast<std::uint64_t>(K.rows()));
    detail::write_pod(os, static_cast<std::uint64_t>(K.cols()));
    detail::write_pod(os, static_cast<std::uint64_t>(K.nnz()));
    detail::write_pod(os, static_cast<std::uint64_t>(K.ordering_nt()));
    os.write(reinterpret_cast<const char*>(K.row_ptr().data()),
             static_cast<std::streamsize>(K.row_ptr().size_bytes()));
    os.write(reinterpret_cast<const char*>(K.col_idx().data()),
             static_cast<std::streamsize>(K.col_idx().size_bytes()));
    os.write(reinterpret_cast<const char*>(K.weights().data()),
             static_cast<std::streamsize>(K.weights().size_bytes()));
    if (!os) throw IoError("failed writing operator file: " + path);
}

inline SparseOperator load_operator(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open operator file: " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, detail::kOperatorMagic, 8) != 0)
        throw IoError("not a pact operator file: " + path);
    std::uint32_t version = 0, ordering = 0;
    detail::read_pod(is, version);
    detail::read_pod(is, ordering);
    if (version != detail::kOperatorVersion || ordering != detail::kDetectorMajor)
        throw IoError("unsupported operator file version/ordering: " + path);
    std::uint64_t rows = 0, cols = 0, nnz = 0, nt = 0;
    detail::read_pod(is, rows);
    detail::read_pod(is, cols);
    detail::read_pod(is, nnz);
    detail::read_pod(is, nt);
    std::vector<std::uint64_t> rp;
    std::vector<std::uint32_t> ci;
    std::vector<double> w;
    detail::read_array(is, rp, rows + 1);
    detail::read_array(is, ci, nnz);
    detail::read_array(is, w, nnz);
    if (!is) throw IoError("truncated operator file: " + path);
    return SparseOperator(rows, cols, std::move(rp), std::move(ci), std::move(w), nt);
}

}  // namespace pact
