#include "vsum/tensor.hpp"

#include <cmath>

VSUM_NS_BEGIN

Tensor2::Tensor2(int r, int c, Real fill)
    : rows(r), cols(c), v(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {
    if (r < 0 || c < 0) {
        throw DimensionError("tensor shape must be non-negative, got " + shape_str());
    }
}

Tensor2 Tensor2::from(std::initializer_list<std::initializer_list<Real>> data) {
    Tensor2 t;
    t.rows = static_cast<int>(data.size());
    t.cols = t.rows > 0 ? static_cast<int>(data.begin()->size()) : 0;
    t.v.reserve(static_cast<std::size_t>(t.rows) * t.cols);
    for (const auto& row : data) {
        if (static_cast<int>(row.size()) != t.cols) {
            throw DimensionError("ragged initializer rows");
        }
        t.v.insert(t.v.end(), row.begin(), row.end());
    }
    return t;
}

std::string Tensor2::shape_str() const {
    return std::to_string(rows) + "x" + std::to_string(cols);
}

bool Tensor2::all_finite() const {
    for (Real x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

std::string shape_mismatch_msg(const char* op, const Tensor2& a, const Tensor2& b) {
    return std::string(op) + ": incompatible shapes " + a.shape_str() + " and " + b.shape_str();
}

Tensor2 matmul(const Tensor2& a, const Tensor2& b) {
    if (a.cols != b.rows) {
        throw DimensionError(shape_mismatch_msg("matmul", a, b));
    }
    Tensor2 out(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        const Real* arow = a.v.data() + static_cast<std::size_t>(i) * a.cols;
        Real* orow = out.v.data() + static_cast<std::size_t>(i) * b.cols;
        for (int k = 0; k < a.cols; ++k) {
            const Real aik = arow[k];
            if (aik == Real(0)) continue;
            const Real* brow = b.v.data() + static_cast<std::size_t>(k) * b.cols;
            for (int j = 0; j < b.cols; ++j) {
                orow[j] += aik * brow[j];
            }
        }
    }
    return out;
}

Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b) {
    if (a.cols != b.cols) {
        throw DimensionError(shape_mismatch_msg("matmul_nt", a, b));
    }
    Tensor2 out(a.rows, b.rows);
    for (int i = 0; i < a.rows; ++i) {
        const Real* arow = a.v.data() + static_cast<std::size_t>(i) * a.cols;
        for (int j = 0; j < b.rows; ++j) {
            const Real* brow = b.v.data() + static_cast<std::size_t>(j) * b.cols;
            Real acc = 0;
            for (int k = 0; k < a.cols; ++k) {
                acc += arow[k] * brow[k];
            }
            out.at(i, j) = acc;
        }
    }
    return out;
}

Tensor2 add(const Tensor2& a, const Tensor2& b) {
    if (!a.same_shape(b)) {
        throw DimensionError(shape_mismatch_msg("add", a, b));
    }
    Tensor2 out = a;
    for (std::size_t i = 0; i < out.v.size(); ++i) {
        out.v[i] += b.v[i];
    }
    return out;
}

Tensor2 add_broadcast(const Tensor2& a, const Tensor2& row) {
    if (row.rows != 1 || row.cols != a.cols) {
        throw DimensionError(shape_mismatch_msg("add_broadcast", a, row));
    }
    Tensor2 out = a;
    for (int i = 0; i < a.rows; ++i) {
        for (int j = 0; j < a.cols; ++j) {
            out.at(i, j) += row.v[static_cast<std::size_t>(j)];
        }
    }
    return out;
}

Tensor2 elementwise_mul(const Tensor2& a, const Tensor2& b) {
    if (!a.same_shape(b)) {
        throw DimensionError(shape_mismatch_msg("elementwise_mul", a, b));
    }
    Tensor2 out = a;
    for (std::size_t i = 0; i < out.v.size(); ++i) {
        out.v[i] *= b.v[i];
    }
    return out;
}

Tensor2 scale(const Tensor2& a, Real c) {
    Tensor2 out = a;
    for (Real& x : out.v) x *= c;
    return out;
}

Tensor2 softmax_rows(const Tensor2& a) {
    Tensor2 out(a.rows, a.cols);
    for (int i = 0; i < a.rows; ++i) {
        Real mx = a.at(i, 0);
        for (int j = 1; j < a.cols; ++j) {
            mx = std::max(mx, a.at(i, j));
        }
        Real sum = 0;
        for (int j = 0; j < a.cols; ++j) {
            const Real e = std::exp(a.at(i, j) - mx);
            out.at(i, j) = e;
            sum += e;
        }
        for (int j = 0; j < a.cols; ++j) {
            out.at(i, j) /= sum;
        }
    }
    return out;
}

Tensor2 l2_normalize_rows(const Tensor2& a) {
    Tensor2 out = a;
    for (int i = 0; i < a.rows; ++i) {
        Real sumsq = 0;
        for (int j = 0; j < a.cols; ++j) {
            sumsq += a.at(i, j) * a.at(i, j);
        }
        if (sumsq == Real(0)) continue;  // zero rows stay zero
        const Real inv = Real(1) / std::sqrt(sumsq);
        for (int j = 0; j < a.cols; ++j) {
            out.at(i, j) *= inv;
        }
    }
    return out;
}

Tensor2 layer_norm_rows(const Tensor2& a, const Tensor2& gain, const Tensor2& bias, Real eps) {
    if (gain.rows != 1 || gain.cols != a.cols || bias.rows != 1 || bias.cols != a.cols) {
        throw DimensionError("layer_norm_rows: gain/bias must be 1x" + std::to_string(a.cols));
    }
    Tensor2 out(a.rows, a.cols);
    const Real inv_n = Real(1) / Real(a.cols);
    for (int i = 0; i < a.rows; ++i) {
        Real mean = 0;
        for (int j = 0; j < a.cols; ++j) mean += a.at(i, j);
        mean *= inv_n;
        Real var = 0;
        for (int j = 0; j < a.cols; ++j) {
            const Real d = a.at(i, j) - mean;
            var += d * d;
        }
        var *= inv_n;
        const Real inv_std = Real(1) / std::sqrt(var + eps);
        for (int j = 0; j < a.cols; ++j) {
            out.at(i, j) = (a.at(i, j) - mean) * inv_std * gain.v[static_cast<std::size_t>(j)] +
                           bias.v[static_cast<std::size_t>(j)];
        }
    }
    return out;
}

Tensor2 sigmoid(const Tensor2& a) {
    Tensor2 out = a;
    for (Real& x : out.v) {
        if (x >= Real(0)) {
            x = Real(1) / (Real(1) + std::exp(-x));
        } else {
            const Real e = std::exp(x);
            x = e / (Real(1) + e);
        }
    }
    return out;
}

Tensor2 relu(const Tensor2& a) {
    Tensor2 out = a;
    for (Real& x : out.v) {
        if (x < Real(0)) x = Real(0);
    }
    return out;
}

Tensor2 concat_cols(const Tensor2& a, const Tensor2& b) {
    if (a.rows != b.rows) {
        throw DimensionError(shape_mismatch_msg("concat_cols", a, b));
    }
    Tensor2 out(a.rows, a.cols + b.cols);
    for (int i = 0; i < a.rows; ++i) {
        for (int j = 0; j < a.cols; ++j) out.at(i, j) = a.at(i, j);
        for (int j = 0; j < b.cols; ++j) out.at(i, a.cols + j) = b.at(i, j);
    }
    return out;
}

Tensor2 dropout_mask(int rows, int cols, Real rate, Rng& rng) {
    if (!(rate >= Real(0) && rate < Real(1))) {
        throw DimensionError("dropout rate must be in [0, 1), got " + std::to_string(rate));
    }
    Tensor2 mask(rows, cols);
    const Real keep_scale = Real(1) / (Real(1) - rate);
    for (Real& m : mask.v) {
        m = rng.uniform() >= rate ? keep_scale : Real(0);
    }
    return mask;
}

Tensor2 dropout(const Tensor2& a, Real rate, Rng& rng, bool training) {
    if (!training || rate == Real(0)) {
        if (!(rate >= Real(0) && rate < Real(1))) {
            throw DimensionError("dropout rate must be in [0, 1), got " + std::to_string(rate));
        }
        return a;
    }
    return elementwise_mul(a, dropout_mask(a.rows, a.cols, rate, rng));
}

VSUM_NS_END
