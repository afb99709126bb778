#pragma once

#include "gns.hpp"

namespace starmod {

// ---------------------------------------------------------------------------
// Conjugate modules.
// ---------------------------------------------------------------------------

/**
 * The conjugate of a right module: the same coordinate set viewed as a left
 * module, with alpha * bar(x) = bar(conj(alpha) * x) and d * bar(x) =
 * bar(x * d^*).  Elements are stored by their preimage under the bar map.
 */
struct ConjugateModule {
    ModulePtr underlying;
};

inline ConjugateModule conjugate_module(const ModulePtr& m) { return ConjugateModule{m}; }

struct ConjugateElement {
    ModuleElement base;  // bar(base)
};

inline ConjugateElement bar(const ModuleElement& x) { return ConjugateElement{x}; }

inline ModuleElement unbar(const ConjugateElement& x) { return x.base; }

inline ConjugateElement operator+(const ConjugateElement& x, const ConjugateElement& y) {
    return ConjugateElement{x.base + y.base};
}

inline ConjugateElement operator*(const Scalar& alpha, const ConjugateElement& x) {
    return ConjugateElement{alpha.conj() * x.base};
}

// Left coefficient action through the involution of the right action.
inline ConjugateElement left_act(const AlgebraElement& d, const ConjugateElement& x) {
    return ConjugateElement{x.base * d.involute()};
}

// ---------------------------------------------------------------------------
// The correspondence between inner products and matrix-valued pair maps.
// ---------------------------------------------------------------------------

/**
 * A sesquilinear pair map on the formal tensor of a conjugate module with the
 * module itself, presented by its generator values Phi(bar(g_i) (x) g_j).
 * The flip bar(x) (x) y -> bar(y) (x) x must be carried to the involution of
 * the values.
 */
struct PhiMap {
    ModulePtr domain;  // pairs are taken from this module's generators
    AMat values;       // k x k over the coefficient algebra
};

inline PhiMap phi_from_inner(const ModulePtr& m) { return PhiMap{m, m->gram}; }

inline ModulePtr inner_from_phi(const PhiMap& phi) {
    const AMat& v = phi.values;
    for (int i = 0; i < v.rows(); ++i)
        for (int j = 0; j < v.cols(); ++j)
            if (!(conj_of(v.at(i, j)) == v.at(j, i)))
                throw std::invalid_argument(
                    "inner_from_phi: values do not respect the pair flip involution");
    return InnerProductModule::create(phi.domain->algebra, v, phi.domain->display_name);
}

// Phi extended to general pairs bar(x) (x) y by antilinearity in the first
// slot: sum_ij x_i^* values_ij y_j.
inline AlgebraElement phi_apply(const PhiMap& phi, const ModuleElement& x, const ModuleElement& y) {
    if (x.module() != phi.domain || y.module() != phi.domain)
        throw std::invalid_argument("phi_apply: elements are not from the domain module");
    const AlgebraPtr& alg = phi.domain->algebra;
    AlgebraElement s = AlgebraElement::zero(alg);
    for (int i = 0; i < phi.domain->rank; ++i) {
        if (x.coord(i).is_zero()) continue;
        AlgebraElement xi = x.coord(i).involute();
        for (int j = 0; j < phi.domain->rank; ++j) {
            if (y.coord(j).is_zero()) continue;
            s += xi * phi.values.at(i, j) * y.coord(j);
        }
    }
    return s;
}

// ---------------------------------------------------------------------------
// Presentation reduction by eliminating generators along the radical.
// ---------------------------------------------------------------------------

struct ReducedPresentation {
    ModulePtr module;      // presented on the surviving generators
    AMat quotient_map;     // new rank x old rank
    std::vector<int> kept;  // surviving generator indices in the original
    bool fully_reduced = false;  // final radical is zero
};

namespace detail {

// Two-sided ring inverse of an algebra element, if one exists.
inline std::optional<AlgebraElement> ring_inverse(const AlgebraElement& a) {
    const AlgebraPtr& alg = a.algebra();
    if (!alg->unit) return std::nullopt;
    const int d = alg->dim;
    SMat l = left_mult_matrix(a);
    FMat sys(d, d, CFrac::zero(alg->variant));
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) sys.at(i, j) = CFrac(l.at(i, j));
    FVec rhs;
    for (int i = 0; i < d; ++i) rhs.push_back(CFrac((*alg->unit)[static_cast<std::size_t>(i)]));
    LinSolve sol = solve_linear(sys, rhs);
    if (!sol.consistent) return std::nullopt;
    SVec coords(static_cast<std::size_t>(d), Scalar::zero(alg->variant));
    for (int i = 0; i < d; ++i) {
        auto r = sol.particular[static_cast<std::size_t>(i)].to_ring();
        if (!r) return std::nullopt;
        coords[static_cast<std::size_t>(i)] = *r;
    }
    AlgebraElement inv(alg, std::move(coords));
    AlgebraElement u = AlgebraElement::unit(alg);
    if (!(a * inv == u) || !(inv * a == u)) return std::nullopt;
    return inv;
}

inline AMat delete_row_col(const AMat& g, int p) {
    AMat out = amat_zero(g.at(0, 0).algebra(), g.rows() - 1, g.cols() - 1);
    for (int i = 0, io = 0; i < g.rows(); ++i) {
        if (i == p) continue;
        for (int j = 0, jo = 0; j < g.cols(); ++j) {
            if (j == p) continue;
            out.at(io, jo) = g.at(i, j);
            ++jo;
        }
        ++io;
    }
    return out;
}

}  // namespace detail

/**
 * Quotient a presented module toward nondegeneracy: whenever a radical vector
 * has a ring-invertible coordinate, the corresponding generator is redundant
 * and is eliminated by a row replacement.  The loop stops when the radical is
 * zero or no coordinate is invertible; the latter leaves a degenerate but
 * honest presentation.
 */
inline ReducedPresentation reduce_presentation(const ModulePtr& m) {
    const AlgebraPtr& alg = m->algebra;
    AMat gram = m->gram;
    std::vector<int> kept(static_cast<std::size_t>(m->rank));
    for (int i = 0; i < m->rank; ++i) kept[static_cast<std::size_t>(i)] = i;
    AMat q = amat_identity(alg, m->rank);

    for (;;) {
        int rank = gram.rows();
        if (rank == 0) break;
        ModulePtr cur = InnerProductModule::create(alg, gram);
        std::vector<ModuleElement> rad = radical_basis(cur);
        if (rad.empty()) break;
        // Candidate radical vectors: the basis plus small two-term sums; over
        // matrix coefficients an invertible coordinate often appears only in
        // a combination such as (E11, *) + (E22, *).
        std::vector<ModuleElement> cand = rad;
        const Scalar one = Scalar::one(alg->variant);
        const Scalar iu = Scalar::i_unit(alg->variant);
        const Scalar coeffs[] = {one, Scalar::zero(alg->variant) - one, iu,
                                 Scalar::zero(alg->variant) - iu};
        for (std::size_t s = 0; s < rad.size(); ++s)
            for (std::size_t t = s + 1; t < rad.size(); ++t)
                for (const Scalar& c : coeffs) cand.push_back(rad[s] + c * rad[t]);
        int drop = -1;
        std::optional<AlgebraElement> inv;
        const ModuleElement* vec = nullptr;
        for (const auto& r : cand) {
            for (int p = rank - 1; p >= 0; --p) {
                if (r.coord(p).is_zero()) continue;
                if (auto s = detail::ring_inverse(r.coord(p))) {
                    drop = p;
                    inv = s;
                    vec = &r;
                    break;
                }
            }
            if (drop >= 0) break;
        }
        if (drop < 0) break;
        // g_drop = -sum_{i != drop} g_i r_i s modulo the radical.
        AMat repl = amat_zero(alg, rank - 1, rank);
        for (int i = 0, io = 0; i < rank; ++i) {
            if (i == drop) continue;
            repl.at(io, i) = AlgebraElement::unit(alg);
            repl.at(io, drop) = AlgebraElement::zero(alg) - vec->coord(i) * *inv;
            ++io;
        }
        q = repl * q;
        gram = detail::delete_row_col(gram, drop);
        kept.erase(kept.begin() + drop);
    }

    ReducedPresentation out{InnerProductModule::create(alg, gram, m->display_name), std::move(q),
                            std::move(kept), false};
    out.fully_reduced = out.module->rank == 0 || is_nondegenerate(out.module).nondegenerate;
    return out;
}

// ---------------------------------------------------------------------------
// Internal tensor product with the induced inner product.
// ---------------------------------------------------------------------------

/**
 * F (x)_B E for F a module over B and E a module over A carrying a
 * *-representation of B.  Pair (p, i) is generator g_p (x) e_i at index
 * p * rank(E) + i; the induced A-valued product is
 * <x1 (x) y1, x2 (x) y2> = <y1, <x1, x2> y2>.  The result is the quotient of
 * the formal module by its radical, which absorbs the balancing relations.
 */
struct TensorModule {
    ModulePtr left_factor;   // F over B
    ModulePtr right_factor;  // E over A
    ModulePtr formal;        // generator pairs before the quotient
    ModulePtr result;        // after the degeneracy quotient
    AMat quotient_map;       // result rank x formal rank
    std::vector<int> kept;   // surviving pair indices
    Representation middle_action;              // B on E
    std::optional<Representation> induced;     // C on result, when F carries C
    bool fully_reduced = false;
};

inline TensorModule internal_tensor(const ModulePtr& f_in, const Representation& middle,
                                    const std::optional<Representation>& outer = std::nullopt) {
    ModulePtr f = f_in;
    const AlgebraPtr& bmid = middle.algebra;
    if (f->algebra != bmid) {
        if (!same_presentation(f->algebra, bmid))
            throw std::invalid_argument(
                "internal_tensor: left factor coefficients differ from the acting algebra");
        f = InnerProductModule::create(bmid, amat_retag(bmid, f->gram), f->display_name);
    }
    if (outer && outer->module != f_in)
        throw std::invalid_argument("internal_tensor: outer action lives on a different module");
    CheckReport mid_ok = check_representation(middle);
    if (!mid_ok.ok)
        throw std::invalid_argument("internal_tensor: middle action is not a star representation: " +
                                    mid_ok.failures.front());

    const ModulePtr& e = middle.module;
    const AlgebraPtr& a = e->algebra;
    const int kf = f->rank, ke = e->rank;
    const int n = kf * ke;

    AMat gt = amat_zero(a, n, n);
    for (int p = 0; p < kf; ++p)
        for (int qq = 0; qq < kf; ++qq) {
            AMat block = e->gram * rep_image(middle, f->gram.at(p, qq));
            for (int i = 0; i < ke; ++i)
                for (int j = 0; j < ke; ++j) gt.at(p * ke + i, qq * ke + j) = block.at(i, j);
        }
    ModulePtr formal = InnerProductModule::create(
        a, gt, f->display_name + " (x) " + e->display_name);

    // Induced outer action on pairs: c.(g_p (x) e_i) expands through both
    // representations.
    std::vector<AMat> pair_images;
    if (outer) {
        pair_images.reserve(static_cast<std::size_t>(outer->algebra->dim));
        for (int c = 0; c < outer->algebra->dim; ++c) {
            const AMat& fc = outer->images[static_cast<std::size_t>(c)];
            AMat im = amat_zero(a, n, n);
            for (int qq = 0; qq < kf; ++qq)
                for (int p = 0; p < kf; ++p) {
                    if (fc.at(qq, p).is_zero()) continue;
                    AMat blk = rep_image(middle, fc.at(qq, p));
                    for (int mm = 0; mm < ke; ++mm)
                        for (int i = 0; i < ke; ++i) im.at(qq * ke + mm, p * ke + i) = blk.at(mm, i);
                }
            pair_images.push_back(std::move(im));
        }
        // The radical must be carried into itself by the outer action.
        std::vector<ModuleElement> rad = radical_basis(formal);
        for (const auto& r : rad) {
            for (int c = 0; c < outer->algebra->dim; ++c) {
                std::vector<AlgebraElement> moved(static_cast<std::size_t>(n),
                                                  AlgebraElement::zero(a));
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) {
                        if (pair_images[static_cast<std::size_t>(c)].at(i, j).is_zero()) continue;
                        moved[static_cast<std::size_t>(i)] +=
                            pair_images[static_cast<std::size_t>(c)].at(i, j) * r.coord(j);
                    }
                ModuleElement mv(formal, std::move(moved));
                for (int j = 0; j < n; ++j)
                    if (!inner_product(ModuleElement::generator(formal, j), mv).is_zero())
                        throw std::logic_error(
                            "internal_tensor: radical is not invariant under the outer action");
            }
        }
    }

    ReducedPresentation red = reduce_presentation(formal);

    TensorModule out{f, e, formal, red.module, red.quotient_map, red.kept, middle, std::nullopt,
                     red.fully_reduced};

    if (outer) {
        // Section: inclusion of the surviving generators.
        AMat section = amat_zero(a, n, red.module->rank);
        for (int j = 0; j < red.module->rank; ++j)
            section.at(out.kept[static_cast<std::size_t>(j)], j) = AlgebraElement::unit(a);
        Representation ind{outer->algebra, red.module, {}};
        for (int c = 0; c < outer->algebra->dim; ++c)
            ind.images.push_back(red.quotient_map *
                                 (pair_images[static_cast<std::size_t>(c)] * section));
        CheckReport rep = check_representation(ind);
        if (!rep.ok)
            throw std::logic_error("internal_tensor: induced action fails certification: " +
                                   rep.failures.front());
        out.induced = std::move(ind);
    }
    return out;
}

// Coordinates of x (x) y on the formal pair module.
inline ModuleElement tensor_element_formal(const TensorModule& t, const ModuleElement& x,
                                           const ModuleElement& y) {
    if (x.module() != t.left_factor || y.module() != t.right_factor)
        throw std::invalid_argument("tensor_element_formal: factors do not match");
    const AlgebraPtr& a = t.right_factor->algebra;
    const int ke = t.right_factor->rank;
    std::vector<AlgebraElement> coords(static_cast<std::size_t>(t.formal->rank),
                                       AlgebraElement::zero(a));
    for (int p = 0; p < t.left_factor->rank; ++p) {
        if (x.coord(p).is_zero()) continue;
        AMat act = rep_image(t.middle_action, x.coord(p));
        for (int i = 0; i < ke; ++i) {
            AlgebraElement s = AlgebraElement::zero(a);
            for (int j = 0; j < ke; ++j) {
                if (act.at(i, j).is_zero() || y.coord(j).is_zero()) continue;
                s += act.at(i, j) * y.coord(j);
            }
            coords[static_cast<std::size_t>(p * ke + i)] = std::move(s);
        }
    }
    return ModuleElement(t.formal, std::move(coords));
}

// Class of x (x) y in the reduced module.
inline ModuleElement tensor_element(const TensorModule& t, const ModuleElement& x,
                                    const ModuleElement& y) {
    ModuleElement z = tensor_element_formal(t, x, y);
    std::vector<AlgebraElement> coords;
    coords.reserve(static_cast<std::size_t>(t.result->rank));
    for (int i = 0; i < t.result->rank; ++i) {
        AlgebraElement s = AlgebraElement::zero(t.result->algebra);
        for (int j = 0; j < t.formal->rank; ++j) {
            if (t.quotient_map.at(i, j).is_zero() || z.coord(j).is_zero()) continue;
            s += t.quotient_map.at(i, j) * z.coord(j);
        }
        coords.push_back(std::move(s));
    }
    return ModuleElement(t.result, std::move(coords));
}

// Complete positivity of the reduced inner product; expected positive when
// both factors are, so a negative verdict signals an implementation fault.
inline CpReport positivity_of_tensor(const TensorModule& t,
                                     const std::vector<Functional>& samples = {}) {
    return is_completely_positive(t.result, samples);
}

}  // namespace starmod
