#pragma once

#include <algorithm>
#include <cassert>
#include <optional>

#include "matrix.hpp"

namespace starmod {

using FVec = std::vector<CFrac>;
using SVec = std::vector<Scalar>;

// ---------------------------------------------------------------------------
// Field linear algebra over CFrac.
// ---------------------------------------------------------------------------

struct Rref {
    int rank = 0;
    std::vector<int> pivot_cols;
};

// In-place reduced row echelon form.
inline Rref rref(FMat& a) {
    Rref out;
    int row = 0;
    for (int col = 0; col < a.cols() && row < a.rows(); ++col) {
        int piv = -1;
        for (int i = row; i < a.rows(); ++i)
            if (!a.at(i, col).is_zero()) {
                piv = i;
                break;
            }
        if (piv < 0) continue;
        a.swap_rows(row, piv);
        CFrac inv = CFrac::one(a.zero().variant()) / a.at(row, col);
        for (int j = 0; j < a.cols(); ++j) a.at(row, j) *= inv;
        for (int i = 0; i < a.rows(); ++i) {
            if (i == row || a.at(i, col).is_zero()) continue;
            CFrac f = a.at(i, col);
            for (int j = 0; j < a.cols(); ++j) a.at(i, j) -= f * a.at(row, j);
        }
        out.pivot_cols.push_back(col);
        ++row;
    }
    out.rank = row;
    return out;
}

inline int rank_of(FMat a) { return rref(a).rank; }

// Kernel basis of a (as column vectors), from the RREF free columns.
inline std::vector<FVec> kernel_basis(FMat a) {
    RingVariant v = a.zero().variant();
    Rref r = rref(a);
    std::vector<bool> is_pivot(static_cast<std::size_t>(a.cols()), false);
    for (int c : r.pivot_cols) is_pivot[static_cast<std::size_t>(c)] = true;
    std::vector<FVec> out;
    for (int freec = 0; freec < a.cols(); ++freec) {
        if (is_pivot[static_cast<std::size_t>(freec)]) continue;
        FVec vvec(static_cast<std::size_t>(a.cols()), CFrac::zero(v));
        vvec[static_cast<std::size_t>(freec)] = CFrac::one(v);
        for (int k = 0; k < r.rank; ++k)
            vvec[static_cast<std::size_t>(r.pivot_cols[static_cast<std::size_t>(k)])] =
                -a.at(k, freec);
        out.push_back(std::move(vvec));
    }
    return out;
}

struct LinSolve {
    bool consistent = false;
    FVec particular;                // one solution of A x = b
    std::vector<FVec> kernel;       // basis of A x = 0
};

inline LinSolve solve_linear(const FMat& a, const FVec& b) {
    RingVariant v = a.zero().variant();
    FMat aug(a.rows(), a.cols() + 1, a.zero());
    for (int i = 0; i < a.rows(); ++i) {
        for (int j = 0; j < a.cols(); ++j) aug.at(i, j) = a.at(i, j);
        aug.at(i, a.cols()) = b[static_cast<std::size_t>(i)];
    }
    Rref r = rref(aug);
    LinSolve out;
    for (int c : r.pivot_cols)
        if (c == a.cols()) return out;  // inconsistent
    out.consistent = true;
    out.particular.assign(static_cast<std::size_t>(a.cols()), CFrac::zero(v));
    for (int k = 0; k < r.rank; ++k)
        out.particular[static_cast<std::size_t>(r.pivot_cols[static_cast<std::size_t>(k)])] =
            aug.at(k, a.cols());
    // Kernel from the coefficient part of the RREF.
    std::vector<bool> is_pivot(static_cast<std::size_t>(a.cols()), false);
    for (int c : r.pivot_cols) is_pivot[static_cast<std::size_t>(c)] = true;
    for (int freec = 0; freec < a.cols(); ++freec) {
        if (is_pivot[static_cast<std::size_t>(freec)]) continue;
        FVec vvec(static_cast<std::size_t>(a.cols()), CFrac::zero(v));
        vvec[static_cast<std::size_t>(freec)] = CFrac::one(v);
        for (int k = 0; k < r.rank; ++k)
            vvec[static_cast<std::size_t>(r.pivot_cols[static_cast<std::size_t>(k)])] =
                -aug.at(k, freec);
        out.kernel.push_back(std::move(vvec));
    }
    return out;
}

inline std::optional<FMat> invert(const FMat& a) {
    if (a.rows() != a.cols()) return std::nullopt;
    RingVariant v = a.zero().variant();
    int n = a.rows();
    FMat aug(n, 2 * n, a.zero());
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) aug.at(i, j) = a.at(i, j);
        aug.at(i, n + i) = CFrac::one(v);
    }
    Rref r = rref(aug);
    // Invertible iff the pivots are exactly the left-block columns.
    if (r.rank < n || r.pivot_cols[static_cast<std::size_t>(n - 1)] != n - 1)
        return std::nullopt;
    FMat inv(n, n, a.zero());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) inv.at(i, j) = aug.at(i, n + j);
    return inv;
}

// ---------------------------------------------------------------------------
// Denominator clearing: field vectors to primitive ring vectors.
// ---------------------------------------------------------------------------

// Scale a field vector to a ring vector whose entries have gcd 1.
inline SVec clear_denominators(const FVec& x) {
    if (x.empty()) return {};
    RingVariant v = x[0].variant();
    Scalar lcm = Scalar::one(v);
    for (const auto& e : x) {
        if (e.is_zero()) continue;
        Scalar g = scalar_gcd(lcm, e.den());
        lcm = *Scalar::divide_exact(lcm * e.den(), g);
    }
    SVec out;
    out.reserve(x.size());
    for (const auto& e : x) {
        CFrac scaled = e * CFrac(lcm);
        auto s = scaled.to_ring();
        assert(s);
        out.push_back(*s);
    }
    Scalar content = Scalar::zero(v);
    for (const auto& s : out)
        if (!s.is_zero()) content = content.is_zero() ? s : scalar_gcd(content, s);
    if (!content.is_zero() && !content.is_one())
        for (auto& s : out) s = *Scalar::divide_exact(s, content);
    return out;
}

// ---------------------------------------------------------------------------
// Ring-level column reduction with unimodular transform tracking.
// ---------------------------------------------------------------------------

/**
 * Column reduction of a ring matrix A over C (Q(i) or Q(i)[lambda]) by
 * elementary row and column operations; only the column transform W and its
 * inverse are tracked.  After reduction, A*W has exactly `rank` nonzero
 * columns (the leading ones), so the trailing columns of W form a basis of
 * the saturated kernel {x in C^k : A x = 0} and (W^-1 x) restricted to the
 * leading coordinates gives ring-valued coordinates on C^k / ker.
 */
struct ColReduction {
    int rank = 0;
    SMat w;     // k x k unimodular
    SMat winv;  // inverse of w
};

inline ColReduction reduce_columns(SMat b) {
    RingVariant v = b.zero().variant();
    const int m = b.rows(), k = b.cols();
    ColReduction out{0, SMat::identity(k, Scalar::zero(v), Scalar::one(v)),
                     SMat::identity(k, Scalar::zero(v), Scalar::one(v))};
    SMat& w = out.w;
    SMat& winv = out.winv;

    auto swap_cols_tracked = [&](int j, int l) {
        b.swap_cols(j, l);
        w.swap_cols(j, l);
        winv.swap_rows(j, l);
    };
    // col_j -= q * col_t  (W := W * E, Winv := E^-1 * Winv)
    auto add_col_tracked = [&](int j, int t, const Scalar& q) {
        Scalar nq = -q;
        b.add_col(j, t, nq);
        w.add_col(j, t, nq);
        winv.add_row(t, j, q);
    };

    int t = 0;
    std::vector<bool> row_used(static_cast<std::size_t>(m), false);
    while (t < k) {
        // Minimum-degree nonzero entry among unused rows and columns >= t.
        int pi = -1, pj = -1, pdeg = -1;
        for (int i = 0; i < m; ++i) {
            if (row_used[static_cast<std::size_t>(i)]) continue;
            for (int j = t; j < k; ++j) {
                if (b.at(i, j).is_zero()) continue;
                int d = b.at(i, j).degree();
                if (pdeg < 0 || d < pdeg) {
                    pi = i;
                    pj = j;
                    pdeg = d;
                }
            }
        }
        if (pi < 0) break;
        if (pj != t) swap_cols_tracked(t, pj);

        // Alternate row and column clearing until row pi and the pivot's
        // row-neighbourhood are consistent; degrees strictly decrease.
        for (;;) {
            bool clean = true;
            // Clear the pivot row to the right of t by column ops.
            for (int j = t + 1; j < k; ++j) {
                if (b.at(pi, j).is_zero()) continue;
                auto [q, r] = Scalar::quo_rem(b.at(pi, j), b.at(pi, t));
                if (!q.is_zero()) add_col_tracked(j, t, q);
                if (!r.is_zero()) clean = false;
            }
            if (clean) break;
            // Some remainder has smaller degree than the pivot: re-pick the
            // minimum-degree entry in the pivot row and move it to column t.
            int bj = t, bdeg = b.at(pi, t).degree();
            for (int j = t + 1; j < k; ++j) {
                if (b.at(pi, j).is_zero()) continue;
                int d = b.at(pi, j).degree();
                if (d < bdeg) {
                    bdeg = d;
                    bj = j;
                }
            }
            if (bj != t) swap_cols_tracked(t, bj);
        }
        // Clear the pivot column below/above by untracked row ops.
        for (int i = 0; i < m; ++i) {
            if (i == pi || row_used[static_cast<std::size_t>(i)]) continue;
            if (b.at(i, t).is_zero()) continue;
            auto [q, r] = Scalar::quo_rem(b.at(i, t), b.at(pi, t));
            if (!q.is_zero()) b.add_row(i, pi, -q);
            if (!r.is_zero()) {
                // Remainder survives in this row; it will be treated when the
                // outer loop selects it as a pivot for a later column.  Row
                // ops keep the column span intact, so correctness holds; we
                // simply do not mark the row as used.
            }
        }
        // Rows with residue in column t block the "A*W has zero trailing
        // columns" invariant; loop until column t is clear below the pivot.
        bool column_clear = true;
        for (int i = 0; i < m; ++i) {
            if (i == pi || row_used[static_cast<std::size_t>(i)]) continue;
            if (!b.at(i, t).is_zero()) {
                column_clear = false;
                break;
            }
        }
        if (!column_clear) continue;  // re-run with a smaller-degree pivot
        row_used[static_cast<std::size_t>(pi)] = true;
        ++t;
    }
    out.rank = t;
    return out;
}

// Saturated kernel basis over the ring: trailing columns of W.
inline std::vector<SVec> saturated_kernel(const SMat& a) {
    ColReduction red = reduce_columns(a);
    std::vector<SVec> out;
    for (int j = red.rank; j < a.cols(); ++j) out.push_back(red.w.col(j));
    return out;
}

// ---------------------------------------------------------------------------
// Hermitian congruence diagonalization over the ordered fraction field.
// ---------------------------------------------------------------------------

struct CongruenceDiag {
    FMat p;                  // columns form the new basis: p^* H p = diag
    std::vector<CFrac> diag; // real diagonal entries
};

inline CongruenceDiag congruence_diagonalize(FMat h) {
    const int n = h.rows();
    RingVariant v = h.zero().variant();
    CongruenceDiag out{FMat::identity(n, CFrac::zero(v), CFrac::one(v)), {}};
    FMat& p = out.p;

    // Column op on h must be mirrored by the conjugate row op to realize
    // E^* H E; p records only the column ops.
    auto add_tracked = [&](int j, int k, const CFrac& c) {
        h.add_col(j, k, c);
        h.add_row(j, k, conj(c));
        p.add_col(j, k, c);
    };
    auto swap_tracked = [&](int j, int k) {
        h.swap_cols(j, k);
        h.swap_rows(j, k);
        p.swap_cols(j, k);
    };

    for (int t = 0; t < n; ++t) {
        int piv = -1;
        for (int j = t; j < n; ++j)
            if (!h.at(j, j).is_zero()) {
                piv = j;
                break;
            }
        if (piv < 0) {
            // All remaining diagonal entries vanish; manufacture one from an
            // off-diagonal entry: with c = conj(H_jk), e_j += c e_k gives
            // diagonal 2|H_jk|^2 > 0.
            int bj = -1, bk = -1;
            for (int j = t; j < n && bj < 0; ++j)
                for (int k = j + 1; k < n; ++k)
                    if (!h.at(j, k).is_zero()) {
                        bj = j;
                        bk = k;
                        break;
                    }
            if (bj < 0) break;  // trailing block identically zero
            add_tracked(bj, bk, conj(h.at(bj, bk)));
            piv = bj;
        }
        if (piv != t) swap_tracked(t, piv);
        for (int j = t + 1; j < n; ++j) {
            if (h.at(t, j).is_zero()) continue;
            add_tracked(j, t, -(h.at(t, j) / h.at(t, t)));
        }
    }
    out.diag.reserve(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) out.diag.push_back(h.at(t, t));
    return out;
}

enum class FormVerdict { positive_definite, positive_semidefinite, indefinite_or_negative };

struct PsdResult {
    FormVerdict verdict;
    std::optional<FVec> negative_witness;  // v with v^* H v < 0
    CongruenceDiag diag;
};

// Decides semidefiniteness of a Hermitian matrix over the ordered field.
inline PsdResult psd_check(const FMat& h) {
    CongruenceDiag d = congruence_diagonalize(h);
    bool strictly = true;
    for (std::size_t k = 0; k < d.diag.size(); ++k) {
        int s = d.diag[k].sign_real();
        if (s < 0) {
            FVec w = d.p.col(static_cast<int>(k));
            return PsdResult{FormVerdict::indefinite_or_negative, std::move(w), std::move(d)};
        }
        if (s == 0) strictly = false;
    }
    return PsdResult{strictly ? FormVerdict::positive_definite
                              : FormVerdict::positive_semidefinite,
                     std::nullopt, std::move(d)};
}

inline bool is_hermitian(const FMat& h) {
    for (int i = 0; i < h.rows(); ++i)
        for (int j = i; j < h.cols(); ++j)
            if (h.at(i, j) != conj(h.at(j, i))) return false;
    return true;
}

inline bool is_hermitian(const SMat& h) {
    for (int i = 0; i < h.rows(); ++i)
        for (int j = i; j < h.cols(); ++j)
            if (h.at(i, j) != h.at(j, i).conj()) return false;
    return true;
}

}  // namespace starmod
