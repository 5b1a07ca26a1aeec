#pragma once

#include <initializer_list>
#include <string>
#include <vector>

#include "vsum/errors.hpp"
#include "vsum/real.hpp"
#include "vsum/rng.hpp"

VSUM_NS_BEGIN

// Dense row-major matrix, the only tensor rank the engine needs.
struct Tensor2 {
    int rows = 0;
    int cols = 0;
    std::vector<Real> v;

    Tensor2() = default;
    Tensor2(int r, int c, Real fill = Real(0));
    static Tensor2 from(std::initializer_list<std::initializer_list<Real>> data);

    Real& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
    Real at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }

    std::size_t size() const { return v.size(); }
    bool same_shape(const Tensor2& o) const { return rows == o.rows && cols == o.cols; }
    std::string shape_str() const;
    bool all_finite() const;
};

std::string shape_mismatch_msg(const char* op, const Tensor2& a, const Tensor2& b);

// Eager kernels. The autodiff tape in graph.hpp records these same
// computations together with their gradient rules.
Tensor2 matmul(const Tensor2& a, const Tensor2& b);
// a * b^T without materializing the transpose.
Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b);
Tensor2 add(const Tensor2& a, const Tensor2& b);
// Adds a 1 x cols row vector to every row of a.
Tensor2 add_broadcast(const Tensor2& a, const Tensor2& row);
Tensor2 elementwise_mul(const Tensor2& a, const Tensor2& b);
Tensor2 scale(const Tensor2& a, Real c);
Tensor2 softmax_rows(const Tensor2& a);
Tensor2 l2_normalize_rows(const Tensor2& a);
Tensor2 layer_norm_rows(const Tensor2& a, const Tensor2& gain, const Tensor2& bias,
                        Real eps = Real(1e-5));
Tensor2 sigmoid(const Tensor2& a);
Tensor2 relu(const Tensor2& a);
Tensor2 concat_cols(const Tensor2& a, const Tensor2& b);

// Dropout mask with survivors pre-scaled by 1/(1-rate); multiplying by it
// applies inverted dropout. Inference needs no mask at all.
Tensor2 dropout_mask(int rows, int cols, Real rate, Rng& rng);
Tensor2 dropout(const Tensor2& a, Real rate, Rng& rng, bool training);

VSUM_NS_END
