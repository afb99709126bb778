#pragma once

#include <memory>
#include <string>

#include "linalg.hpp"

namespace starmod {

class AlgebraPresentation;
using AlgebraPtr = std::shared_ptr<const AlgebraPresentation>;

/**
 * Finite-dimensional *-algebra over C presented by structure constants.
 *
 * structure[a][b] lists the product e_a e_b as a sparse combination of basis
 * elements; involution rows give e_a^* in coordinates, extended antilinearly.
 *
 * An optional list of block representations (jointly faithful unital
 * *-homomorphisms onto a direct sum of scalar matrix algebras) drives exact
 * positivity decisions; it is populated for matrix algebras, function
 * algebras with explicit characters, and matrix extensions of those.
 */
class AlgebraPresentation : public std::enable_shared_from_this<AlgebraPresentation> {
public:
    struct SparseTerm {
        int idx;
        Scalar c;
    };
    using SparseVec = std::vector<SparseTerm>;

    struct Block {
        int size;
        std::vector<SMat> images;  // one size x size matrix per basis element
    };

    std::string display_name;
    RingVariant variant = RingVariant::rational;
    int dim = 0;
    std::vector<std::string> labels;
    std::vector<SparseVec> structure;  // dim*dim entries, index a*dim+b
    SMat involution{0, 0, Scalar()};
    std::optional<SVec> unit;
    std::vector<Block> blocks;
    std::string class_desc = "generic";

    const SparseVec& product_of_basis(int a, int b) const {
        return structure[static_cast<std::size_t>(a) * dim + b];
    }

    bool has_exact_class() const { return !blocks.empty(); }

    int label_index(const std::string& l) const {
        for (int a = 0; a < dim; ++a)
            if (labels[static_cast<std::size_t>(a)] == l) return a;
        return -1;
    }

    static std::shared_ptr<AlgebraPresentation> create() {
        return std::make_shared<AlgebraPresentation>();
    }
};

class AlgebraElement {
public:
    AlgebraElement(AlgebraPtr alg, SVec coords) : alg_(std::move(alg)), coords_(std::move(coords)) {
        if (static_cast<int>(coords_.size()) != alg_->dim)
            throw std::invalid_argument("AlgebraElement: coordinate size mismatch");
    }

    static AlgebraElement zero(const AlgebraPtr& alg) {
        return AlgebraElement(alg, SVec(static_cast<std::size_t>(alg->dim),
                                        Scalar::zero(alg->variant)));
    }

    static AlgebraElement basis(const AlgebraPtr& alg, int a) {
        AlgebraElement e = zero(alg);
        e.coords_[static_cast<std::size_t>(a)] = Scalar::one(alg->variant);
        return e;
    }

    static AlgebraElement unit(const AlgebraPtr& alg) {
        if (!alg->unit) throw std::domain_error("AlgebraElement::unit: algebra has no unit");
        return AlgebraElement(alg, *alg->unit);
    }

    const AlgebraPtr& algebra() const { return alg_; }
    const SVec& coords() const { return coords_; }
    Scalar coord(int a) const { return coords_[static_cast<std::size_t>(a)]; }

    bool is_zero() const {
        for (const auto& c : coords_)
            if (!c.is_zero()) return false;
        return true;
    }

    friend AlgebraElement operator+(const AlgebraElement& x, const AlgebraElement& y) {
        x.require_same(y);
        AlgebraElement r = x;
        for (std::size_t a = 0; a < r.coords_.size(); ++a) r.coords_[a] += y.coords_[a];
        return r;
    }

    friend AlgebraElement operator-(const AlgebraElement& x, const AlgebraElement& y) {
        x.require_same(y);
        AlgebraElement r = x;
        for (std::size_t a = 0; a < r.coords_.size(); ++a) r.coords_[a] -= y.coords_[a];
        return r;
    }

    AlgebraElement operator-() const {
        AlgebraElement r = *this;
        for (auto& c : r.coords_) c = -c;
        return r;
    }

    friend AlgebraElement operator*(const Scalar& c, const AlgebraElement& x) {
        AlgebraElement r = x;
        for (auto& v : r.coords_) v = c * v;
        return r;
    }

    friend AlgebraElement operator*(const AlgebraElement& x, const AlgebraElement& y) {
        x.require_same(y);
        AlgebraElement r = zero(x.alg_);
        const int n = x.alg_->dim;
        for (int a = 0; a < n; ++a) {
            const Scalar& xa = x.coords_[static_cast<std::size_t>(a)];
            if (xa.is_zero()) continue;
            for (int b = 0; b < n; ++b) {
                const Scalar& yb = y.coords_[static_cast<std::size_t>(b)];
                if (yb.is_zero()) continue;
                Scalar f = xa * yb;
                for (const auto& t : x.alg_->product_of_basis(a, b))
                    r.coords_[static_cast<std::size_t>(t.idx)] += f * t.c;
            }
        }
        return r;
    }

    AlgebraElement& operator+=(const AlgebraElement& y) { return *this = *this + y; }
    AlgebraElement& operator-=(const AlgebraElement& y) { return *this = *this - y; }

    // Antilinear involution: (sum c_a e_a)^* = sum conj(c_a) e_a^*.
    AlgebraElement involute() const {
        AlgebraElement r = zero(alg_);
        for (int a = 0; a < alg_->dim; ++a) {
            Scalar ca = coords_[static_cast<std::size_t>(a)].conj();
            if (ca.is_zero()) continue;
            for (int b = 0; b < alg_->dim; ++b) {
                const Scalar& ib = alg_->involution.at(a, b);
                if (!ib.is_zero()) r.coords_[static_cast<std::size_t>(b)] += ca * ib;
            }
        }
        return r;
    }

    bool is_hermitian() const { return involute() == *this; }

    friend bool operator==(const AlgebraElement& x, const AlgebraElement& y) {
        x.require_same(y);
        return x.coords_ == y.coords_;
    }

    friend bool operator!=(const AlgebraElement& x, const AlgebraElement& y) { return !(x == y); }

private:
    void require_same(const AlgebraElement& y) const {
        if (alg_ != y.alg_)
            throw std::invalid_argument("AlgebraElement: elements live in different algebras");
    }

    AlgebraPtr alg_;
    SVec coords_;
};

inline AlgebraElement multiply(const AlgebraElement& x, const AlgebraElement& y) { return x * y; }
inline AlgebraElement involute(const AlgebraElement& x) { return x.involute(); }

// C-linear functional given by its values on the basis.
class Functional {
public:
    Functional(AlgebraPtr alg, SVec values) : alg_(std::move(alg)), values_(std::move(values)) {
        if (static_cast<int>(values_.size()) != alg_->dim)
            throw std::invalid_argument("Functional: value list size mismatch");
    }

    const AlgebraPtr& algebra() const { return alg_; }
    const SVec& values() const { return values_; }

    Scalar operator()(const AlgebraElement& x) const {
        if (x.algebra() != alg_)
            throw std::invalid_argument("Functional: element from a different algebra");
        Scalar s = Scalar::zero(alg_->variant);
        for (int a = 0; a < alg_->dim; ++a) s += x.coord(a) * values_[static_cast<std::size_t>(a)];
        return s;
    }

    friend bool operator==(const Functional& f, const Functional& g) {
        return f.alg_ == g.alg_ && f.values_ == g.values_;
    }

private:
    AlgebraPtr alg_;
    SVec values_;
};

// omega_b(a) = omega(b^* a b).
inline Functional functional_twist(const Functional& omega, const AlgebraElement& b) {
    const AlgebraPtr& alg = omega.algebra();
    if (b.algebra() != alg)
        throw std::invalid_argument("functional_twist: element from a different algebra");
    AlgebraElement bs = b.involute();
    SVec vals;
    vals.reserve(static_cast<std::size_t>(alg->dim));
    for (int a = 0; a < alg->dim; ++a)
        vals.push_back(omega(bs * AlgebraElement::basis(alg, a) * b));
    return Functional(alg, std::move(vals));
}

// ---------------------------------------------------------------------------
// Axiom checking.
// ---------------------------------------------------------------------------

struct StarCheckReport {
    bool ok = true;
    std::vector<std::string> failures;

    void fail(std::string what) {
        ok = false;
        if (failures.size() < 32) failures.push_back(std::move(what));
    }
};

inline StarCheckReport check_star_algebra(const AlgebraPtr& alg) {
    StarCheckReport rep;
    const int n = alg->dim;
    if (static_cast<int>(alg->labels.size()) != n ||
        static_cast<int>(alg->structure.size()) != n * n ||
        alg->involution.rows() != n || alg->involution.cols() != n) {
        rep.fail("presentation shape mismatch");
        return rep;
    }
    auto lbl = [&](int a) { return alg->labels[static_cast<std::size_t>(a)]; };

    std::vector<AlgebraElement> e;
    for (int a = 0; a < n; ++a) e.push_back(AlgebraElement::basis(alg, a));

    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c)
                if ((e[a] * e[b]) * e[c] != e[a] * (e[b] * e[c]))
                    rep.fail("associativity fails at (" + lbl(a) + ", " + lbl(b) + ", " + lbl(c) +
                             ")");

    for (int a = 0; a < n; ++a)
        if (e[a].involute().involute() != e[a])
            rep.fail("involution is not involutive at " + lbl(a));

    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            if ((e[a] * e[b]).involute() != e[b].involute() * e[a].involute())
                rep.fail("involution is not an antihomomorphism at (" + lbl(a) + ", " + lbl(b) +
                         ")");

    if (alg->unit) {
        AlgebraElement u(alg, *alg->unit);
        for (int a = 0; a < n; ++a) {
            if (u * e[a] != e[a]) rep.fail("unit fails on the left at " + lbl(a));
            if (e[a] * u != e[a]) rep.fail("unit fails on the right at " + lbl(a));
        }
        if (u.involute() != u) rep.fail("unit is not hermitian");
    }

    // Block representations must be jointly faithful unital *-homomorphisms
    // filling the dimension, so positivity decisions through them are exact.
    if (!alg->blocks.empty()) {
        int total = 0;
        for (const auto& blk : alg->blocks) total += blk.size * blk.size;
        if (total != n) rep.fail("block sizes do not fill the algebra dimension");
        for (std::size_t bi = 0; bi < alg->blocks.size(); ++bi) {
            const auto& blk = alg->blocks[bi];
            std::string tag = "block " + std::to_string(bi);
            if (static_cast<int>(blk.images.size()) != n) {
                rep.fail(tag + " image count mismatch");
                continue;
            }
            auto image_of = [&](const AlgebraElement& x) {
                SMat m(blk.size, blk.size, Scalar::zero(alg->variant));
                for (int a = 0; a < n; ++a) {
                    if (x.coord(a).is_zero()) continue;
                    for (int i = 0; i < blk.size; ++i)
                        for (int j = 0; j < blk.size; ++j)
                            m.at(i, j) += x.coord(a) * blk.images[static_cast<std::size_t>(a)].at(i, j);
                }
                return m;
            };
            for (int a = 0; a < n && rep.failures.size() < 32; ++a)
                for (int b = 0; b < n; ++b) {
                    SMat lhs = image_of(e[a] * e[b]);
                    SMat rhs = blk.images[static_cast<std::size_t>(a)] *
                               blk.images[static_cast<std::size_t>(b)];
                    if (!(lhs == rhs)) {
                        rep.fail(tag + " is not multiplicative at (" + lbl(a) + ", " + lbl(b) + ")");
                        break;
                    }
                }
            for (int a = 0; a < n; ++a)
                if (!(image_of(e[a].involute()) ==
                      blk.images[static_cast<std::size_t>(a)].conj_transpose()))
                    rep.fail(tag + " does not intertwine the involution at " + lbl(a));
            if (alg->unit) {
                SMat u = image_of(AlgebraElement::unit(alg));
                if (!(u == SMat::identity(blk.size, Scalar::zero(alg->variant),
                                          Scalar::one(alg->variant))))
                    rep.fail(tag + " is not unital");
            }
        }
        // Joint faithfulness: the stacked coordinate map has full rank.
        int rows = 0;
        for (const auto& blk : alg->blocks) rows += blk.size * blk.size;
        FMat stacked(rows, n, CFrac::zero(alg->variant));
        int r0 = 0;
        for (const auto& blk : alg->blocks) {
            for (int a = 0; a < n; ++a) {
                const SMat& im = blk.images[static_cast<std::size_t>(a)];
                for (int i = 0; i < blk.size; ++i)
                    for (int j = 0; j < blk.size; ++j)
                        stacked.at(r0 + i * blk.size + j, a) = CFrac(im.at(i, j));
            }
            r0 += blk.size * blk.size;
        }
        if (rank_of(stacked) != n) rep.fail("block representations are not jointly faithful");
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Constructors for the stock presentations.
// ---------------------------------------------------------------------------

// One-dimensional algebra C itself; label "1".  Memoized per variant so that
// independently built scalar-coefficient carriers share one instance and
// their elements mix without retagging.
inline AlgebraPtr scalar_algebra(RingVariant v = RingVariant::rational) {
    auto make = [](RingVariant vv) {
        auto alg = AlgebraPresentation::create();
        alg->display_name = "scalars";
        alg->variant = vv;
        alg->dim = 1;
        alg->labels = {"1"};
        alg->structure = {{{0, Scalar::one(vv)}}};
        alg->involution = SMat::identity(1, Scalar::zero(vv), Scalar::one(vv));
        alg->unit = SVec{Scalar::one(vv)};
        alg->blocks.push_back({1, {SMat::identity(1, Scalar::zero(vv), Scalar::one(vv))}});
        alg->class_desc = "matrix";
        return alg;
    };
    static const AlgebraPtr rational_instance = make(RingVariant::rational);
    static const AlgebraPtr lambda_instance = make(RingVariant::lambda_poly);
    return v == RingVariant::rational ? rational_instance : lambda_instance;
}

// Functions on n points with pointwise operations; labels d1..dn.
inline AlgebraPtr function_algebra(int npoints, RingVariant v = RingVariant::rational) {
    auto alg = AlgebraPresentation::create();
    alg->display_name = "functions(" + std::to_string(npoints) + ")";
    alg->variant = v;
    alg->dim = npoints;
    Scalar zero = Scalar::zero(v), one = Scalar::one(v);
    for (int p = 0; p < npoints; ++p) alg->labels.push_back("d" + std::to_string(p + 1));
    alg->structure.assign(static_cast<std::size_t>(npoints) * npoints, {});
    for (int a = 0; a < npoints; ++a)
        alg->structure[static_cast<std::size_t>(a) * npoints + a] = {{a, one}};
    alg->involution = SMat::identity(npoints, zero, one);
    alg->unit = SVec(static_cast<std::size_t>(npoints), one);
    for (int p = 0; p < npoints; ++p) {
        AlgebraPresentation::Block blk{1, {}};
        for (int a = 0; a < npoints; ++a) {
            SMat m(1, 1, zero);
            m.at(0, 0) = a == p ? one : zero;
            blk.images.push_back(std::move(m));
        }
        alg->blocks.push_back(std::move(blk));
    }
    alg->class_desc = "functions";
    return alg;
}

// M_n over a presentation p: basis E_ij (x) e_a with block multiplication.
inline AlgebraPtr matrix_algebra(const AlgebraPtr& base, int n) {
    if (n <= 0) throw std::invalid_argument("matrix_algebra: n must be positive");
    auto alg = AlgebraPresentation::create();
    RingVariant v = base->variant;
    alg->display_name = "M" + std::to_string(n) + "(" + base->display_name + ")";
    alg->variant = v;
    const int d = base->dim;
    alg->dim = n * n * d;
    Scalar zero = Scalar::zero(v), one = Scalar::one(v);

    auto idx = [&](int i, int j, int a) { return (i * n + j) * d + a; };
    bool trivial_base = d == 1 && base->labels[0] == "1";
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int a = 0; a < d; ++a) {
                std::string l = "E" + std::to_string(i + 1) + std::to_string(j + 1);
                if (!trivial_base) l += "_" + base->labels[static_cast<std::size_t>(a)];
                alg->labels.push_back(std::move(l));
            }

    alg->structure.assign(static_cast<std::size_t>(alg->dim) * alg->dim, {});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int a = 0; a < d; ++a)
                for (int k = 0; k < n; ++k)
                    for (int l = 0; l < n; ++l)
                        for (int b = 0; b < d; ++b) {
                            if (j != k) continue;
                            AlgebraPresentation::SparseVec terms;
                            for (const auto& t : base->product_of_basis(a, b))
                                terms.push_back({idx(i, l, t.idx), t.c});
                            alg->structure[static_cast<std::size_t>(idx(i, j, a)) * alg->dim +
                                           idx(k, l, b)] = std::move(terms);
                        }

    alg->involution = SMat(alg->dim, alg->dim, zero);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) {
                    const Scalar& c = base->involution.at(a, b);
                    if (!c.is_zero()) alg->involution.at(idx(i, j, a), idx(j, i, b)) = c;
                }

    if (base->unit) {
        SVec u(static_cast<std::size_t>(alg->dim), zero);
        for (int i = 0; i < n; ++i)
            for (int a = 0; a < d; ++a)
                u[static_cast<std::size_t>(idx(i, i, a))] = (*base->unit)[static_cast<std::size_t>(a)];
        alg->unit = std::move(u);
    }

    // Lift block representations: chi lifts to chi (x) id_n on n*s matrices.
    for (const auto& blk : base->blocks) {
        AlgebraPresentation::Block nblk{n * blk.size, {}};
        nblk.images.assign(static_cast<std::size_t>(alg->dim),
                           SMat(n * blk.size, n * blk.size, zero));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int a = 0; a < d; ++a) {
                    SMat& m = nblk.images[static_cast<std::size_t>(idx(i, j, a))];
                    const SMat& im = blk.images[static_cast<std::size_t>(a)];
                    for (int r = 0; r < blk.size; ++r)
                        for (int c = 0; c < blk.size; ++c)
                            m.at(i * blk.size + r, j * blk.size + c) = im.at(r, c);
                }
        alg->blocks.push_back(std::move(nblk));
    }
    alg->class_desc = base->class_desc == "matrix" && base->blocks.size() == 1
                          ? "matrix"
                          : "matrix(" + base->class_desc + ")";
    return alg;
}

}  // namespace starmod
