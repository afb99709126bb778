#pragma once

#include <random>
#include <utility>

#include "wedge.hpp"

namespace starmod {

inline AlgebraElement conj_of(const AlgebraElement& x) { return x.involute(); }

// Matrices over a *-algebra; conj_transpose applies the involution entrywise.
using AMat = Mat<AlgebraElement>;

inline AMat amat_zero(const AlgebraPtr& alg, int rows, int cols) {
    return AMat(rows, cols, AlgebraElement::zero(alg));
}

inline AMat amat_identity(const AlgebraPtr& alg, int n) {
    AMat m = amat_zero(alg, n, n);
    for (int k = 0; k < n; ++k) m.at(k, k) = AlgebraElement::unit(alg);
    return m;
}

inline AMat amat_scale(const AMat& m, const Scalar& c) {
    AMat r = m;
    for (int i = 0; i < r.rows(); ++i)
        for (int j = 0; j < r.cols(); ++j) r.at(i, j) = c * r.at(i, j);
    return r;
}

// Scalar matrix of left multiplication by a; column b holds the coordinates
// of a e_b.  right_mult_matrix is the same for e_b a.
inline SMat left_mult_matrix(const AlgebraElement& a) {
    const AlgebraPtr& alg = a.algebra();
    SMat m(alg->dim, alg->dim, Scalar::zero(alg->variant));
    for (int b = 0; b < alg->dim; ++b) {
        AlgebraElement col = a * AlgebraElement::basis(alg, b);
        for (int r = 0; r < alg->dim; ++r) m.at(r, b) = col.coord(r);
    }
    return m;
}

inline SMat right_mult_matrix(const AlgebraElement& a) {
    const AlgebraPtr& alg = a.algebra();
    SMat m(alg->dim, alg->dim, Scalar::zero(alg->variant));
    for (int b = 0; b < alg->dim; ++b) {
        AlgebraElement col = AlgebraElement::basis(alg, b) * a;
        for (int r = 0; r < alg->dim; ++r) m.at(r, b) = col.coord(r);
    }
    return m;
}

// Structural equality of presentations, used to mix objects built over
// separately constructed but identical coefficient algebras.
inline bool same_presentation(const AlgebraPtr& a, const AlgebraPtr& b) {
    if (a == b) return true;
    if (a->variant != b->variant || a->dim != b->dim) return false;
    for (std::size_t k = 0; k < a->structure.size(); ++k) {
        const auto& sa = a->structure[k];
        const auto& sb = b->structure[k];
        if (sa.size() != sb.size()) return false;
        for (std::size_t t = 0; t < sa.size(); ++t)
            if (sa[t].idx != sb[t].idx || !(sa[t].c == sb[t].c)) return false;
    }
    if (!(a->involution == b->involution)) return false;
    if (a->unit.has_value() != b->unit.has_value()) return false;
    if (a->unit && !(*a->unit == *b->unit)) return false;
    return true;
}

inline AlgebraElement retag(const AlgebraPtr& alg, const AlgebraElement& x) {
    return AlgebraElement(alg, x.coords());
}

inline AMat amat_retag(const AlgebraPtr& alg, const AMat& m) {
    AMat r = amat_zero(alg, m.rows(), m.cols());
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) r.at(i, j) = retag(alg, m.at(i, j));
    return r;
}

/**
 * Free right module over a *-algebra presented by a Hermitian Gram matrix.
 *
 * The presented object is the quotient of the free module on rank generators
 * by the radical of the inner product; a presentation with trivial radical
 * is the free module itself.  All inner-product data is the Gram matrix.
 */
class InnerProductModule : public std::enable_shared_from_this<InnerProductModule> {
public:
    std::string display_name;
    AlgebraPtr algebra;
    int rank = 0;
    AMat gram;

    InnerProductModule(AlgebraPtr alg, AMat g, std::string name)
        : display_name(std::move(name)), algebra(std::move(alg)), rank(g.rows()), gram(std::move(g)) {}

    static std::shared_ptr<const InnerProductModule> create(const AlgebraPtr& alg, const AMat& g,
                                                            std::string name = "") {
        if (g.rows() != g.cols())
            throw std::invalid_argument("InnerProductModule: gram matrix must be square");
        for (int i = 0; i < g.rows(); ++i)
            for (int j = 0; j < g.cols(); ++j) {
                if (g.at(i, j).algebra() != alg)
                    throw std::invalid_argument(
                        "InnerProductModule: gram entry from a different algebra");
                if (!(g.at(i, j).involute() == g.at(j, i)))
                    throw std::invalid_argument("InnerProductModule: gram matrix is not hermitian");
            }
        return std::make_shared<InnerProductModule>(alg, g, std::move(name));
    }
};

using ModulePtr = std::shared_ptr<const InnerProductModule>;

inline ModulePtr free_module(const AlgebraPtr& alg, int k, std::string name = "") {
    return InnerProductModule::create(alg, amat_identity(alg, k), std::move(name));
}

inline ModulePtr canonical_module(const AlgebraPtr& alg) {
    return free_module(alg, 1, alg->display_name + " as a module over itself");
}

class ModuleElement {
public:
    ModuleElement(ModulePtr m, std::vector<AlgebraElement> coords)
        : mod_(std::move(m)), coords_(std::move(coords)) {
        if (static_cast<int>(coords_.size()) != mod_->rank)
            throw std::invalid_argument("ModuleElement: coordinate size mismatch");
    }

    static ModuleElement zero(const ModulePtr& m) {
        return ModuleElement(
            m, std::vector<AlgebraElement>(static_cast<std::size_t>(m->rank),
                                           AlgebraElement::zero(m->algebra)));
    }

    static ModuleElement generator(const ModulePtr& m, int i) {
        ModuleElement x = zero(m);
        x.coords_[static_cast<std::size_t>(i)] = AlgebraElement::unit(m->algebra);
        return x;
    }

    const ModulePtr& module() const { return mod_; }
    const std::vector<AlgebraElement>& coords() const { return coords_; }
    const AlgebraElement& coord(int i) const { return coords_[static_cast<std::size_t>(i)]; }

    bool is_zero() const {
        for (const auto& c : coords_)
            if (!c.is_zero()) return false;
        return true;
    }

    friend ModuleElement operator+(const ModuleElement& x, const ModuleElement& y) {
        x.require_same(y);
        ModuleElement r = x;
        for (std::size_t k = 0; k < r.coords_.size(); ++k) r.coords_[k] += y.coords_[k];
        return r;
    }

    friend ModuleElement operator-(const ModuleElement& x, const ModuleElement& y) {
        x.require_same(y);
        ModuleElement r = x;
        for (std::size_t k = 0; k < r.coords_.size(); ++k) r.coords_[k] -= y.coords_[k];
        return r;
    }

    ModuleElement operator-() const {
        ModuleElement r = *this;
        for (auto& c : r.coords_) c = -c;
        return r;
    }

    // Right action by a coefficient; the module is a right module.
    friend ModuleElement operator*(const ModuleElement& x, const AlgebraElement& d) {
        ModuleElement r = x;
        for (auto& c : r.coords_) c = c * d;
        return r;
    }

    friend ModuleElement operator*(const Scalar& c, const ModuleElement& x) {
        ModuleElement r = x;
        for (auto& v : r.coords_) v = c * v;
        return r;
    }

    friend bool operator==(const ModuleElement& x, const ModuleElement& y) {
        x.require_same(y);
        return x.coords_ == y.coords_;
    }

    friend bool operator!=(const ModuleElement& x, const ModuleElement& y) { return !(x == y); }

private:
    void require_same(const ModuleElement& y) const {
        if (mod_ != y.mod_)
            throw std::invalid_argument("ModuleElement: elements live in different modules");
    }

    ModulePtr mod_;
    std::vector<AlgebraElement> coords_;
};

inline AlgebraElement inner_product(const ModuleElement& x, const ModuleElement& y) {
    if (x.module() != y.module())
        throw std::invalid_argument("inner_product: elements live in different modules");
    const ModulePtr& m = x.module();
    AlgebraElement s = AlgebraElement::zero(m->algebra);
    for (int i = 0; i < m->rank; ++i) {
        if (x.coord(i).is_zero()) continue;
        AlgebraElement xi = x.coord(i).involute();
        for (int j = 0; j < m->rank; ++j) {
            if (y.coord(j).is_zero()) continue;
            s += xi * m->gram.at(i, j) * y.coord(j);
        }
    }
    return s;
}

// ---------------------------------------------------------------------------
// Scalar flattening.  A module element over a dim-d algebra is a rank*d
// coordinate vector; operators become block scalar matrices.
// ---------------------------------------------------------------------------

inline SVec flatten(const ModuleElement& x) {
    const ModulePtr& m = x.module();
    const int d = m->algebra->dim;
    SVec v(static_cast<std::size_t>(m->rank) * d, Scalar::zero(m->algebra->variant));
    for (int i = 0; i < m->rank; ++i)
        for (int r = 0; r < d; ++r) v[static_cast<std::size_t>(i) * d + r] = x.coord(i).coord(r);
    return v;
}

inline ModuleElement unflatten(const ModulePtr& m, const SVec& v) {
    const int d = m->algebra->dim;
    if (static_cast<int>(v.size()) != m->rank * d)
        throw std::invalid_argument("unflatten: size mismatch");
    std::vector<AlgebraElement> coords;
    coords.reserve(static_cast<std::size_t>(m->rank));
    for (int i = 0; i < m->rank; ++i) {
        SVec c(v.begin() + static_cast<std::ptrdiff_t>(i) * d,
               v.begin() + static_cast<std::ptrdiff_t>(i + 1) * d);
        coords.emplace_back(m->algebra, std::move(c));
    }
    return ModuleElement(m, std::move(coords));
}

// Block scalar matrix of x -> T x with T over the coefficient algebra.
inline SMat operator_flat(const AMat& t, const AlgebraPtr& alg) {
    const int d = alg->dim;
    SMat m(t.rows() * d, t.cols() * d, Scalar::zero(alg->variant));
    for (int i = 0; i < t.rows(); ++i)
        for (int j = 0; j < t.cols(); ++j) {
            if (t.at(i, j).is_zero()) continue;
            SMat blk = left_mult_matrix(t.at(i, j));
            for (int r = 0; r < d; ++r)
                for (int c = 0; c < d; ++c) m.at(i * d + r, j * d + c) = blk.at(r, c);
        }
    return m;
}

// ---------------------------------------------------------------------------
// Radical and nondegeneracy.
// ---------------------------------------------------------------------------

struct Nondegeneracy {
    bool nondegenerate = false;
    std::vector<ModuleElement> radical;
};

inline std::vector<ModuleElement> radical_basis(const ModulePtr& m) {
    SMat pairing = operator_flat(m->gram, m->algebra);
    std::vector<ModuleElement> out;
    for (const auto& v : saturated_kernel(pairing)) out.push_back(unflatten(m, v));
    return out;
}

inline Nondegeneracy is_nondegenerate(const ModulePtr& m) {
    Nondegeneracy r;
    r.radical = radical_basis(m);
    r.nondegenerate = r.radical.empty();
    return r;
}

// ---------------------------------------------------------------------------
// Complete positivity of the inner product.
// ---------------------------------------------------------------------------

struct CpReport {
    bool positive = false;
    bool exact = false;  // decided through block representations
    std::string detail;
};

// Flatten a matrix over the algebra through one block representation.
inline FMat block_flatten(const AlgebraPresentation::Block& blk, const AMat& g,
                          RingVariant variant) {
    const int s = blk.size;
    FMat f(g.rows() * s, g.cols() * s, CFrac::zero(variant));
    for (int i = 0; i < g.rows(); ++i)
        for (int j = 0; j < g.cols(); ++j) {
            SMat im = detail::block_image(blk, g.at(i, j));
            for (int r = 0; r < s; ++r)
                for (int c = 0; c < s; ++c) f.at(i * s + r, j * s + c) = CFrac(im.at(r, c));
        }
    return f;
}

namespace detail {

inline bool amat_blockwise_psd(const AlgebraPtr& alg, const AMat& g, std::string& why) {
    for (std::size_t b = 0; b < alg->blocks.size(); ++b) {
        FMat f = block_flatten(alg->blocks[b], g, alg->variant);
        if (!is_hermitian(f)) {
            why = "flattened matrix through block " + std::to_string(b) + " is not hermitian";
            return false;
        }
        PsdResult p = psd_check(f);
        if (p.verdict == FormVerdict::indefinite_or_negative) {
            why = "flattened matrix through block " + std::to_string(b) +
                  " is not positive semidefinite";
            return false;
        }
    }
    return true;
}

inline Scalar small_random_scalar(std::mt19937_64& rng, RingVariant v) {
    std::uniform_int_distribution<int> pick(-2, 2);
    Scalar s(Rat(pick(rng)), v);
    int kind = static_cast<int>(rng() % 4);
    if (kind == 1) s += Scalar(Rat(pick(rng)), v) * Scalar::i_unit(v);
    if (kind == 2 && v == RingVariant::lambda_poly)
        s += Scalar(Rat(pick(rng)), v) * Scalar::lambda(1, v);
    return s;
}

}  // namespace detail

/**
 * Positivity of the Gram matrix in every matrix level over the coefficient
 * algebra.  For Gram-presented modules the single Gram test decides; random
 * tuple matrices (x_i, x_j) are re-tested as a guard on the implementation.
 * Without block representations a nonempty family of positive functionals
 * must be supplied; the verdict is then relative to that sampled family.
 */
inline CpReport is_completely_positive(const ModulePtr& m,
                                       const std::vector<Functional>& samples = {},
                                       unsigned spot_seed = 20260814u) {
    CpReport rep;
    const AlgebraPtr& alg = m->algebra;
    if (m->rank == 0) {
        rep.positive = true;
        rep.exact = alg->has_exact_class();
        return rep;
    }
    if (alg->has_exact_class()) {
        rep.exact = true;
        std::string why;
        if (!detail::amat_blockwise_psd(alg, m->gram, why)) {
            rep.positive = false;
            rep.detail = why;
            return rep;
        }
        // Random-tuple spot check: congruence transforms of a positive Gram
        // must stay positive; a failure is an implementation fault.
        std::mt19937_64 rng(spot_seed);
        for (int trial = 0; trial < 6; ++trial) {
            int n = 1 + static_cast<int>(rng() % 3);
            std::vector<ModuleElement> xs;
            for (int t = 0; t < n; ++t) {
                ModuleElement x = ModuleElement::zero(m);
                std::vector<AlgebraElement> coords;
                for (int i = 0; i < m->rank; ++i) {
                    SVec c;
                    for (int a = 0; a < alg->dim; ++a)
                        c.push_back(detail::small_random_scalar(rng, alg->variant));
                    coords.emplace_back(alg, std::move(c));
                }
                xs.emplace_back(m, std::move(coords));
            }
            AMat h = amat_zero(alg, n, n);
            for (int s = 0; s < n; ++s)
                for (int t = 0; t < n; ++t) h.at(s, t) = inner_product(xs[static_cast<std::size_t>(s)],
                                                                       xs[static_cast<std::size_t>(t)]);
            std::string why2;
            if (!detail::amat_blockwise_psd(alg, h, why2)) {
                rep.positive = false;
                rep.detail = "random tuple spot check failed: " + why2;
                return rep;
            }
        }
        rep.positive = true;
        return rep;
    }
    if (samples.empty())
        throw std::domain_error(
            "is_completely_positive: coefficient algebra has no exact class and no sample "
            "functionals were supplied");
    // Sampled surrogate: probe <v, v> for a deterministic family of vectors.
    std::vector<ModuleElement> probes;
    for (int i = 0; i < m->rank; ++i)
        for (int a = 0; a < alg->dim; ++a) {
            ModuleElement v = ModuleElement::zero(m);
            std::vector<AlgebraElement> coords = v.coords();
            coords[static_cast<std::size_t>(i)] = AlgebraElement::basis(alg, a);
            probes.emplace_back(m, coords);
        }
    std::vector<ModuleElement> singles = probes;
    for (std::size_t s = 0; s < singles.size(); ++s)
        for (std::size_t t = s + 1; t < singles.size(); ++t) {
            probes.push_back(singles[s] + singles[t]);
            probes.push_back(singles[s] + Scalar::i_unit(alg->variant) * singles[t]);
        }
    for (const auto& v : probes) {
        AlgebraElement d = inner_product(v, v);
        SampledResult r = membership_aplus_sampled(d, samples);
        if (r.verdict != Membership::member) {
            rep.positive = false;
            rep.detail = "sampled functional rejects a probe inner product: " + r.note;
            return rep;
        }
    }
    rep.positive = true;
    rep.detail = "relative to the supplied sample family";
    return rep;
}

// ---------------------------------------------------------------------------
// Operators between modules.
// ---------------------------------------------------------------------------

struct ModuleOperator {
    ModulePtr source;
    ModulePtr target;
    AMat matrix;  // target.rank x source.rank over the coefficient algebra
    std::optional<AMat> adjoint_matrix;
};

inline ModuleOperator identity_operator(const ModulePtr& m) {
    return {m, m, amat_identity(m->algebra, m->rank), amat_identity(m->algebra, m->rank)};
}

inline ModuleOperator zero_operator(const ModulePtr& src, const ModulePtr& tgt) {
    return {src, tgt, amat_zero(tgt->algebra, tgt->rank, src->rank),
            amat_zero(src->algebra, src->rank, tgt->rank)};
}

inline ModuleElement op_apply(const ModuleOperator& a, const ModuleElement& x) {
    if (x.module() != a.source)
        throw std::invalid_argument("op_apply: element is not in the operator's source");
    std::vector<AlgebraElement> out;
    out.reserve(static_cast<std::size_t>(a.target->rank));
    for (int i = 0; i < a.target->rank; ++i) {
        AlgebraElement s = AlgebraElement::zero(a.target->algebra);
        for (int j = 0; j < a.source->rank; ++j) s += a.matrix.at(i, j) * x.coord(j);
        out.push_back(std::move(s));
    }
    return ModuleElement(a.target, std::move(out));
}

inline ModuleOperator op_compose(const ModuleOperator& a, const ModuleOperator& b) {
    if (b.target != a.source) throw std::invalid_argument("op_compose: middle module mismatch");
    ModuleOperator r{b.source, a.target, a.matrix * b.matrix, std::nullopt};
    if (a.adjoint_matrix && b.adjoint_matrix)
        r.adjoint_matrix = *b.adjoint_matrix * *a.adjoint_matrix;
    return r;
}

/**
 * Adjoint by exact solving: <h_i, A g_j> = <A* h_i, g_j> pins the matrix of
 * A* through C G = G' A with C the involuted transpose of the unknown.  A
 * field solution that does not clear to the coefficient ring means no
 * adjoint exists over the ring.
 */
inline std::optional<ModuleOperator> adjoint(const ModuleOperator& a) {
    const ModulePtr& src = a.source;
    const ModulePtr& tgt = a.target;
    const AlgebraPtr& alg = src->algebra;
    const int k = src->rank, mrank = tgt->rank, d = alg->dim;
    AMat rhs = tgt->gram * a.matrix;  // m x k
    AMat c = amat_zero(alg, mrank, k);
    for (int i = 0; i < mrank; ++i) {
        // Unknown row (c_i1..c_ik): sum_p c_ip G_pj = rhs_ij for all j.
        FMat sys(k * d, k * d, CFrac::zero(alg->variant));
        for (int j = 0; j < k; ++j)
            for (int p = 0; p < k; ++p) {
                SMat r = right_mult_matrix(src->gram.at(p, j));
                for (int rr = 0; rr < d; ++rr)
                    for (int cc = 0; cc < d; ++cc)
                        sys.at(j * d + rr, p * d + cc) = CFrac(r.at(rr, cc));
            }
        FVec b(static_cast<std::size_t>(k) * d, CFrac::zero(alg->variant));
        for (int j = 0; j < k; ++j)
            for (int rr = 0; rr < d; ++rr)
                b[static_cast<std::size_t>(j) * d + rr] = CFrac(rhs.at(i, j).coord(rr));
        LinSolve sol = solve_linear(sys, b);
        if (!sol.consistent) return std::nullopt;
        for (int p = 0; p < k; ++p) {
            SVec coords(static_cast<std::size_t>(d), Scalar::zero(alg->variant));
            for (int rr = 0; rr < d; ++rr) {
                auto s = sol.particular[static_cast<std::size_t>(p) * d + rr].to_ring();
                if (!s) return std::nullopt;
                coords[static_cast<std::size_t>(rr)] = *s;
            }
            c.at(i, p) = AlgebraElement(alg, std::move(coords));
        }
    }
    AMat bmat = c.conj_transpose();  // k x m, the matrix of A*
    // Verify the defining identity exactly before reporting success.
    if (!(c * src->gram == rhs)) return std::nullopt;
    return ModuleOperator{tgt, src, bmat, a.matrix};
}

// ---------------------------------------------------------------------------
// Representations and intertwiners.
// ---------------------------------------------------------------------------

struct Representation {
    AlgebraPtr algebra;  // the represented algebra
    ModulePtr module;    // carrier, a module over a possibly different algebra
    std::vector<AMat> images;
};

inline AMat rep_image(const Representation& rho, const AlgebraElement& a) {
    if (!same_presentation(a.algebra(), rho.algebra))
        throw std::invalid_argument("rep_image: element from a different algebra");
    AMat m = amat_zero(rho.module->algebra, rho.module->rank, rho.module->rank);
    for (int b = 0; b < rho.algebra->dim; ++b) {
        if (a.coord(b).is_zero()) continue;
        m = m + amat_scale(rho.images[static_cast<std::size_t>(b)], a.coord(b));
    }
    return m;
}

using CheckReport = StarCheckReport;

/**
 * Representation axioms on basis pairs.  Identities are required modulo the
 * radical of the carrier: the Gram matrix multiplies every defect, so on a
 * nondegenerate module the checks are exact matrix equalities.
 */
inline CheckReport check_representation(const Representation& rho) {
    CheckReport rep;
    const int n = rho.algebra->dim;
    const ModulePtr& m = rho.module;
    if (static_cast<int>(rho.images.size()) != n) {
        rep.fail("image count does not match the algebra dimension");
        return rep;
    }
    for (const auto& im : rho.images)
        if (im.rows() != m->rank || im.cols() != m->rank) {
            rep.fail("image shape does not match the module rank");
            return rep;
        }
    auto lbl = [&](int a) { return rho.algebra->labels[static_cast<std::size_t>(a)]; };
    auto vanishes = [&](const AMat& defect) { return (m->gram * defect).is_zero(); };
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            AMat prod = rho.images[static_cast<std::size_t>(a)] * rho.images[static_cast<std::size_t>(b)];
            AMat expect = rep_image(rho, AlgebraElement::basis(rho.algebra, a) *
                                             AlgebraElement::basis(rho.algebra, b));
            if (!vanishes(prod - expect))
                rep.fail("multiplicativity fails at (" + lbl(a) + ", " + lbl(b) + ")");
        }
    for (int a = 0; a < n; ++a) {
        AMat lhs = m->gram * rho.images[static_cast<std::size_t>(a)];
        AMat rhs = rep_image(rho, AlgebraElement::basis(rho.algebra, a).involute())
                       .conj_transpose() *
                   m->gram;
        if (!(lhs == rhs)) rep.fail("adjoint property fails at " + lbl(a));
    }
    if (rho.algebra->unit) {
        AMat u = rep_image(rho, AlgebraElement::unit(rho.algebra));
        if (!vanishes(u - amat_identity(m->algebra, m->rank))) rep.fail("unit does not act as identity");
    }
    return rep;
}

inline CheckReport check_intertwiner(const ModuleOperator& t, const Representation& rho,
                                     const Representation& rho2) {
    CheckReport rep;
    if (t.source != rho.module || t.target != rho2.module) {
        rep.fail("operator endpoints do not match the representations");
        return rep;
    }
    if (!same_presentation(rho.algebra, rho2.algebra)) {
        rep.fail("represented algebras differ");
        return rep;
    }
    auto lbl = [&](int a) { return rho.algebra->labels[static_cast<std::size_t>(a)]; };
    for (int a = 0; a < rho.algebra->dim; ++a) {
        AMat defect = t.matrix * rho.images[static_cast<std::size_t>(a)] -
                      rho2.images[static_cast<std::size_t>(a)] * t.matrix;
        if (!(rho2.module->gram * defect).is_zero())
            rep.fail("intertwining fails at " + lbl(a));
    }
    if (!adjoint(t)) rep.fail("operator is not adjointable");
    return rep;
}

// ---------------------------------------------------------------------------
// Isometric isomorphisms by exact search.
// ---------------------------------------------------------------------------

struct IsoSearch {
    std::optional<AMat> witness;  // matrix of an isometric isomorphism source -> target
    bool budget_exhausted = false;
    int space_dim = 0;  // field dimension of the intertwiner solution space
};

namespace detail {

inline std::vector<SVec> radical_flats(const ModulePtr& m) {
    return saturated_kernel(operator_flat(m->gram, m->algebra));
}

// Quotient bijectivity of the scalar map induced by t on the presented
// modules: equal quotient dimensions and image + target radical spanning.
inline bool quotient_bijective(const ModulePtr& src, const ModulePtr& tgt, const AMat& t,
                               const std::vector<SVec>& rad_src, const std::vector<SVec>& rad_tgt) {
    const int ds = src->algebra->dim, dt = tgt->algebra->dim;
    const int qs = src->rank * ds - static_cast<int>(rad_src.size());
    const int qt = tgt->rank * dt - static_cast<int>(rad_tgt.size());
    if (qs != qt) return false;
    SMat tf = operator_flat(t, tgt->algebra);
    FMat span(tgt->rank * dt, src->rank * ds + static_cast<int>(rad_tgt.size()),
              CFrac::zero(tgt->algebra->variant));
    for (int i = 0; i < tf.rows(); ++i)
        for (int j = 0; j < tf.cols(); ++j) span.at(i, j) = CFrac(tf.at(i, j));
    for (std::size_t r = 0; r < rad_tgt.size(); ++r)
        for (int i = 0; i < tgt->rank * dt; ++i)
            span.at(i, src->rank * ds + static_cast<int>(r)) = CFrac(rad_tgt[r][static_cast<std::size_t>(i)]);
    return rank_of(span) == tgt->rank * dt;
}

// Attempt to scale t so that t^dagger G' t == G when the defect is a global
// real factor r: find nu with nu conj(nu) = 1/r among small Gaussian
// rationals and check the scaled candidate.
inline std::optional<AMat> normalize_isometry(const ModulePtr& src, const ModulePtr& tgt,
                                              const AMat& t) {
    AMat s = t.conj_transpose() * (tgt->gram * t);
    if (s == src->gram) return t;
    // Detect s == r * gram for a single rational constant r > 0.
    std::optional<Rat> ratio;
    for (int i = 0; i < s.rows(); ++i)
        for (int j = 0; j < s.cols(); ++j) {
            const AlgebraElement& a = s.at(i, j);
            const AlgebraElement& g = src->gram.at(i, j);
            if (g.is_zero()) {
                if (!a.is_zero()) return std::nullopt;
                continue;
            }
            // Componentwise ratio must be one rational constant.
            for (int c = 0; c < src->algebra->dim; ++c) {
                const Scalar& gc = g.coord(c);
                const Scalar& ac = a.coord(c);
                if (gc.is_zero()) {
                    if (!ac.is_zero()) return std::nullopt;
                    continue;
                }
                auto q = Scalar::divide_exact(ac, gc);
                if (!q || !q->is_real() || q->re().degree() != 0) return std::nullopt;
                Rat r = q->re().coeff(0);
                if (ratio && *ratio != r) return std::nullopt;
                ratio = r;
            }
        }
    if (!ratio || *ratio <= 0) return std::nullopt;
    // nu conj(nu) = 1/r with nu = (x + y i)/c: (x^2 + y^2) * num(r) = den(r) * c^2.
    Rat r = *ratio;
    for (int c = 1; c <= 12; ++c)
        for (int x = 0; x <= 12; ++x)
            for (int y = 0; y <= x; ++y) {
                if (x == 0 && y == 0) continue;
                if (Rat(x * x + y * y) * r != Rat(c * c)) continue;
                RingVariant v = src->algebra->variant;
                Scalar nu = Scalar(Rat(x, c), v) + Scalar(Rat(y, c), v) * Scalar::i_unit(v);
                AMat cand = amat_scale(t, nu);
                if (cand.conj_transpose() * (tgt->gram * cand) == src->gram) return cand;
            }
    return std::nullopt;
}

}  // namespace detail

/**
 * Search for a module map src -> target that intertwines the given operator
 * pairs, preserves inner products, and induces a bijection of the presented
 * quotients.  The intertwiner space is solved exactly; candidates are the
 * cleared kernel basis, small two-term combinations, and any suggested
 * matrices, each up to one global Gaussian-rational scaling.
 */
inline IsoSearch find_isometric_isomorphism(const ModulePtr& original_src, const ModulePtr& tgt,
                                            const std::vector<std::pair<AMat, AMat>>& intertwine,
                                            int budget = 64,
                                            const std::vector<AMat>& suggested = {}) {
    IsoSearch out;
    const AlgebraPtr& alg = tgt->algebra;
    if (!same_presentation(original_src->algebra, alg))
        throw std::invalid_argument("find_isometric_isomorphism: coefficient algebras differ");
    ModulePtr src = original_src;
    if (src->algebra != alg)
        src = InnerProductModule::create(alg, amat_retag(alg, src->gram), src->display_name);
    const int k = src->rank, mrank = tgt->rank, d = alg->dim;
    auto rad_src = detail::radical_flats(src);
    auto rad_tgt = detail::radical_flats(tgt);

    int tested = 0;
    auto try_candidate = [&](const AMat& t) -> std::optional<AMat> {
        ++tested;
        auto scaled = detail::normalize_isometry(src, tgt, t);
        if (!scaled) return std::nullopt;
        for (const auto& [ma, mb] : intertwine) {
            AMat defect = *scaled * ma - mb * *scaled;
            if (!(tgt->gram * defect).is_zero()) return std::nullopt;
        }
        if (!detail::quotient_bijective(src, tgt, *scaled, rad_src, rad_tgt)) return std::nullopt;
        return scaled;
    };

    for (const auto& t : suggested) {
        if (tested >= budget) {
            out.budget_exhausted = true;
            return out;
        }
        if (auto w = try_candidate(amat_retag(alg, t))) {
            out.witness = *w;
            return out;
        }
    }

    // Homogeneous intertwiner system, built by probing unit unknowns.
    const int unknowns = mrank * k * d;
    std::vector<AMat> basis_probe;
    basis_probe.reserve(static_cast<std::size_t>(unknowns));
    std::vector<FVec> columns;
    int eqrows = 0;
    for (int q = 0; q < mrank; ++q)
        for (int p = 0; p < k; ++p)
            for (int c = 0; c < d; ++c) {
                AMat t = amat_zero(alg, mrank, k);
                t.at(q, p) = AlgebraElement::basis(alg, c);
                FVec col;
                for (const auto& [ma, mb] : intertwine) {
                    AMat defect = tgt->gram * (t * ma - mb * t);
                    for (int i = 0; i < defect.rows(); ++i)
                        for (int j = 0; j < defect.cols(); ++j)
                            for (int r = 0; r < d; ++r) col.push_back(CFrac(defect.at(i, j).coord(r)));
                }
                eqrows = static_cast<int>(col.size());
                columns.push_back(std::move(col));
                basis_probe.push_back(std::move(t));
            }
    FMat sys(std::max(eqrows, 1), unknowns, CFrac::zero(alg->variant));
    for (int j = 0; j < unknowns; ++j)
        for (int i = 0; i < eqrows; ++i) sys.at(i, j) = columns[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
    std::vector<FVec> ker = kernel_basis(sys);
    out.space_dim = static_cast<int>(ker.size());

    auto matrix_of = [&](const SVec& v) {
        AMat t = amat_zero(alg, mrank, k);
        std::size_t idx = 0;
        for (int q = 0; q < mrank; ++q)
            for (int p = 0; p < k; ++p) {
                SVec coords(static_cast<std::size_t>(d), Scalar::zero(alg->variant));
                for (int c = 0; c < d; ++c) coords[static_cast<std::size_t>(c)] = v[idx++];
                t.at(q, p) = AlgebraElement(alg, std::move(coords));
            }
        return t;
    };

    std::vector<AMat> gens;
    for (const auto& kv : ker) gens.push_back(matrix_of(clear_denominators(kv)));

    for (const auto& t : gens) {
        if (tested >= budget) {
            out.budget_exhausted = true;
            return out;
        }
        if (auto w = try_candidate(t)) {
            out.witness = *w;
            return out;
        }
    }
    const Scalar one = Scalar::one(alg->variant);
    const Scalar iu = Scalar::i_unit(alg->variant);
    const Scalar coeffs[] = {one, -one, iu, Scalar::zero(alg->variant) - iu};
    for (std::size_t s = 0; s < gens.size(); ++s)
        for (std::size_t t2 = s + 1; t2 < gens.size(); ++t2)
            for (const Scalar& c : coeffs) {
                if (tested >= budget) {
                    out.budget_exhausted = true;
                    return out;
                }
                if (auto w = try_candidate(gens[s] + amat_scale(gens[t2], c))) {
                    out.witness = *w;
                    return out;
                }
            }
    return out;
}

enum class EquivVerdict { yes, no, unknown };

struct UnitaryEquivalence {
    EquivVerdict verdict = EquivVerdict::unknown;
    std::optional<ModuleOperator> witness;
    bool budget_exhausted = false;
};

/**
 * Bounded search for a unitary intertwiner.  "no" is only reported on sound
 * grounds: empty intertwiner space between nonzero carriers, or mismatched
 * quotient dimensions; otherwise exhaustion yields "unknown".
 */
inline UnitaryEquivalence are_unitarily_equivalent(const Representation& rho,
                                                   const Representation& rho2, int budget = 64) {
    UnitaryEquivalence out;
    if (!same_presentation(rho.algebra, rho2.algebra))
        throw std::invalid_argument("are_unitarily_equivalent: represented algebras differ");
    std::vector<std::pair<AMat, AMat>> pairs;
    const AlgebraPtr& carrier = rho2.module->algebra;
    for (int a = 0; a < rho.algebra->dim; ++a)
        pairs.emplace_back(amat_retag(carrier, rho.images[static_cast<std::size_t>(a)]),
                           rho2.images[static_cast<std::size_t>(a)]);
    ModulePtr src = rho.module;
    if (src->algebra != carrier) {
        if (!same_presentation(src->algebra, carrier))
            throw std::invalid_argument("are_unitarily_equivalent: carrier algebras differ");
        src = InnerProductModule::create(carrier, amat_retag(carrier, src->gram),
                                         rho.module->display_name);
    }
    IsoSearch iso = find_isometric_isomorphism(src, rho2.module, pairs, budget);
    if (iso.witness) {
        out.verdict = EquivVerdict::yes;
        ModuleOperator t{src, rho2.module, *iso.witness, std::nullopt};
        if (auto adj = adjoint(t)) t.adjoint_matrix = adj->matrix;
        out.witness = t;
        return out;
    }
    auto rad_src = detail::radical_flats(src);
    auto rad_tgt = detail::radical_flats(rho2.module);
    int qs = src->rank * carrier->dim - static_cast<int>(rad_src.size());
    int qt = rho2.module->rank * carrier->dim - static_cast<int>(rad_tgt.size());
    if (qs != qt || (iso.space_dim == 0 && qs > 0)) {
        out.verdict = EquivVerdict::no;
        return out;
    }
    out.verdict = EquivVerdict::unknown;
    out.budget_exhausted = iso.budget_exhausted;
    return out;
}

}  // namespace starmod
