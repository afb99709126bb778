#pragma once

#include "algebra.hpp"

namespace starmod {

// ---------------------------------------------------------------------------
// Positive functionals.
//
// omega is positive iff omega(x^* x) is real and nonnegative for every x.
// On a basis this reduces to the Gram matrix G_ab = omega(e_a^* e_b) being
// hermitian positive semidefinite; a failing x is reconstructed from either
// a non-hermitian pair or a congruence witness column.
// ---------------------------------------------------------------------------

struct PositiveFunctionalCheck {
    bool positive = false;
    std::optional<AlgebraElement> witness;  // omega(w^* w) is negative or not real
    std::string reason;
};

inline FMat functional_gram(const Functional& omega) {
    const AlgebraPtr& alg = omega.algebra();
    const int n = alg->dim;
    FMat g(n, n, CFrac::zero(alg->variant));
    std::vector<AlgebraElement> star;
    for (int a = 0; a < n; ++a) star.push_back(AlgebraElement::basis(alg, a).involute());
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            g.at(a, b) = CFrac(omega(star[static_cast<std::size_t>(a)] *
                                     AlgebraElement::basis(alg, b)));
    return g;
}

inline PositiveFunctionalCheck is_positive_functional(const Functional& omega) {
    const AlgebraPtr& alg = omega.algebra();
    const int n = alg->dim;
    PositiveFunctionalCheck out;
    FMat g = functional_gram(omega);

    auto element_from = [&](const FVec& v) {
        SVec ring = clear_denominators(v);
        return AlgebraElement(alg, std::move(ring));
    };

    // Hermitian failure yields x among e_a + e_b and e_a + i e_b: if both
    // omega(x^* x) values were real the (a,b) entries would be conjugate.
    Scalar iu = Scalar::i_unit(alg->variant);
    CFrac one = CFrac::one(alg->variant);
    for (int a = 0; a < n; ++a)
        for (int b = a; b < n; ++b) {
            if (g.at(a, b) == conj(g.at(b, a))) continue;
            for (int variant_pick = 0; variant_pick < 2; ++variant_pick) {
                FVec v(static_cast<std::size_t>(n), CFrac::zero(alg->variant));
                v[static_cast<std::size_t>(a)] = one;
                v[static_cast<std::size_t>(b)] += variant_pick == 0 ? one : CFrac(iu);
                AlgebraElement x = element_from(v);
                Scalar val = omega(x.involute() * x);
                if (!val.is_real() || (!val.is_zero() && !val.re().is_positive())) {
                    out.witness = x;
                    out.reason = val.is_real() ? "omega(x^* x) is negative"
                                               : "omega(x^* x) is not real";
                    return out;
                }
            }
            out.reason = "gram matrix is not hermitian";
            return out;  // unreachable for honest data, kept as a guard
        }

    PsdResult psd = psd_check(g);
    if (psd.verdict == FormVerdict::indefinite_or_negative) {
        AlgebraElement x = element_from(*psd.negative_witness);
        out.witness = x;
        out.reason = "omega(x^* x) is negative";
        return out;
    }
    out.positive = true;
    out.reason = psd.verdict == FormVerdict::positive_definite ? "gram matrix is positive definite"
                                                               : "gram matrix is positive semidefinite";
    return out;
}

// ---------------------------------------------------------------------------
// Wedge membership.
// ---------------------------------------------------------------------------

enum class Membership { member, not_member, unknown };

enum class CertKind { sos_decomposition, separating_functional, minor_chain, none };

struct SosTerm {
    Scalar coeff;  // real positive
    AlgebraElement vec;
};

struct PositivityCertificate {
    CertKind kind = CertKind::none;
    bool budget_exhausted = false;
    std::vector<SosTerm> sos;                 // a = sum coeff_k vec_k^* vec_k
    std::optional<Functional> separating;     // positive with omega(a) < 0
    std::optional<AlgebraElement> separating_witness;  // vector v behind omega when block-built
    std::string note;
};

struct MembershipResult {
    Membership verdict = Membership::unknown;
    PositivityCertificate cert;
};

namespace detail {

inline SMat block_image(const AlgebraPresentation::Block& blk, const AlgebraElement& x) {
    RingVariant v = x.algebra()->variant;
    SMat m(blk.size, blk.size, Scalar::zero(v));
    for (int a = 0; a < x.algebra()->dim; ++a) {
        const Scalar& c = x.coord(a);
        if (c.is_zero()) continue;
        for (int i = 0; i < blk.size; ++i)
            for (int j = 0; j < blk.size; ++j)
                m.at(i, j) += c * blk.images[static_cast<std::size_t>(a)].at(i, j);
    }
    return m;
}

// Solve sum_a x_a chi(e_a) = target over all blocks jointly; exact because
// the blocks are jointly faithful. Returns basis coordinates as fractions.
inline std::optional<FVec> preimage_through_blocks(const AlgebraPtr& alg,
                                                   const std::vector<SMat>& targets) {
    int rows = 0;
    for (const auto& blk : alg->blocks) rows += blk.size * blk.size;
    CFrac fz = CFrac::zero(alg->variant);
    FMat m(rows, alg->dim, fz);
    FVec rhs(static_cast<std::size_t>(rows), fz);
    int r0 = 0;
    for (std::size_t bi = 0; bi < alg->blocks.size(); ++bi) {
        const auto& blk = alg->blocks[bi];
        for (int a = 0; a < alg->dim; ++a) {
            const SMat& im = blk.images[static_cast<std::size_t>(a)];
            for (int i = 0; i < blk.size; ++i)
                for (int j = 0; j < blk.size; ++j)
                    m.at(r0 + i * blk.size + j, a) = CFrac(im.at(i, j));
        }
        const SMat& t = targets[bi];
        for (int i = 0; i < blk.size; ++i)
            for (int j = 0; j < blk.size; ++j)
                rhs[static_cast<std::size_t>(r0 + i * blk.size + j)] = CFrac(t.at(i, j));
        r0 += blk.size * blk.size;
    }
    LinSolve sol = solve_linear(m, rhs);
    if (!sol.consistent) return std::nullopt;
    return sol.particular;
}

// Express a hermitian element with PSD block images as sum coeff_k v_k^* v_k.
// Each block diagonalizes as P^* (chi a) P = D with D >= 0; the rank-one
// pieces c_j w_j w_j^* pull back through the joint isomorphism. Fractional
// data is cleared into ring vectors, coefficients absorbing the square.
inline std::optional<std::vector<SosTerm>> sos_from_blocks(const AlgebraElement& a) {
    const AlgebraPtr& alg = a.algebra();
    RingVariant v = alg->variant;
    std::vector<SosTerm> out;
    for (std::size_t bi = 0; bi < alg->blocks.size(); ++bi) {
        const auto& blk = alg->blocks[bi];
        FMat h = to_frac(block_image(blk, a));
        CongruenceDiag cd = congruence_diagonalize(h);
        FMat q = invert(cd.p).value();  // chi(a) = Q^* D Q
        for (int k = 0; k < blk.size; ++k) {
            CFrac d = cd.diag[static_cast<std::size_t>(k)];
            if (d.is_zero()) continue;
            if (!d.is_real() || d.sign_real() < 0) return std::nullopt;
            // Row k of Q gives chi(a) restricted piece d * q_k^* q_k, i.e.
            // the matrix d * (row k)^dagger (row k). Build it as a matrix
            // unit sum target in this block, zero in the others.
            FVec row(static_cast<std::size_t>(blk.size), CFrac::zero(v));
            for (int j = 0; j < blk.size; ++j) row[static_cast<std::size_t>(j)] = q.at(k, j);
            SVec ring_row = clear_denominators(row);
            // scale factor t: ring_row = t * row, so d/(t conj t) multiplies.
            // Recover t from the first nonzero coordinate.
            CFrac t = CFrac::zero(v);
            for (std::size_t j = 0; j < row.size(); ++j)
                if (!(row[j] == CFrac::zero(v))) {
                    t = CFrac(ring_row[j]) / row[j];
                    break;
                }
            CFrac coeff = d / (t * conj(t));
            std::vector<SMat> targets;
            for (std::size_t bj = 0; bj < alg->blocks.size(); ++bj) {
                int s = alg->blocks[bj].size;
                SMat tmat(s, s, Scalar::zero(v));
                if (bj == bi)
                    for (int r = 0; r < s; ++r)
                        for (int c = 0; c < s; ++c)
                            tmat.at(r, c) = (r == k ? ring_row[static_cast<std::size_t>(c)]
                                                    : Scalar::zero(v));
                targets.push_back(std::move(tmat));
            }
            auto pre = preimage_through_blocks(alg, targets);
            if (!pre) return std::nullopt;
            SVec ring_pre = clear_denominators(*pre);
            CFrac t2 = CFrac::zero(v);
            for (std::size_t j = 0; j < pre->size(); ++j)
                if (!((*pre)[j] == CFrac::zero(v))) {
                    t2 = CFrac(ring_pre[j]) / (*pre)[j];
                    break;
                }
            CFrac final_coeff = coeff / (t2 * conj(t2));
            auto ring_coeff = final_coeff.to_ring();
            if (!ring_coeff) return std::nullopt;  // coefficient not in the base ring
            out.push_back({*ring_coeff, AlgebraElement(alg, std::move(ring_pre))});
        }
    }
    return out;
}

// Functional omega(x) = v^dagger chi(x) v from a block and a ring vector.
inline Functional vector_state(const AlgebraPtr& alg, std::size_t block_index, const SVec& vec) {
    const auto& blk = alg->blocks[block_index];
    RingVariant var = alg->variant;
    SVec vals;
    vals.reserve(static_cast<std::size_t>(alg->dim));
    for (int a = 0; a < alg->dim; ++a) {
        const SMat& im = blk.images[static_cast<std::size_t>(a)];
        Scalar s = Scalar::zero(var);
        for (int i = 0; i < blk.size; ++i)
            for (int j = 0; j < blk.size; ++j)
                s += vec[static_cast<std::size_t>(i)].conj() * im.at(i, j) *
                     vec[static_cast<std::size_t>(j)];
        vals.push_back(s);
    }
    return Functional(alg, std::move(vals));
}

}  // namespace detail

// Exact replay of a square decomposition against its target.
inline bool verify_sos(const AlgebraElement& a, const std::vector<SosTerm>& terms) {
    AlgebraElement acc = AlgebraElement::zero(a.algebra());
    for (const auto& t : terms) {
        if (!t.coeff.is_real() || (!t.coeff.is_zero() && !t.coeff.re().is_positive()))
            return false;
        acc += t.coeff * (t.vec.involute() * t.vec);
    }
    return acc == a;
}

// Membership in the algebraic wedge (sums of hermitian squares with
// nonnegative real ring coefficients). Sound verdicts only; "unknown" is
// possible for generic presentations or ring-coefficient obstructions.
inline MembershipResult membership_app(const AlgebraElement& a, int budget = 64) {
    const AlgebraPtr& alg = a.algebra();
    MembershipResult res;

    if (!a.is_hermitian()) {
        res.verdict = Membership::not_member;
        res.cert.note = "element is not hermitian";
        return res;
    }

    if (alg->has_exact_class()) {
        bool all_psd = true;
        std::size_t bad_block = 0;
        FVec bad_vec;
        for (std::size_t bi = 0; bi < alg->blocks.size(); ++bi) {
            FMat h = to_frac(detail::block_image(alg->blocks[bi], a));
            PsdResult psd = psd_check(h);
            if (psd.verdict == FormVerdict::indefinite_or_negative) {
                all_psd = false;
                bad_block = bi;
                bad_vec = *psd.negative_witness;
                break;
            }
        }
        if (!all_psd) {
            SVec ring_vec = clear_denominators(bad_vec);
            Functional omega = detail::vector_state(alg, bad_block, ring_vec);
            res.verdict = Membership::not_member;
            res.cert.kind = CertKind::separating_functional;
            res.cert.separating = omega;
            res.cert.note = "positive functional with a negative value on the element";
            return res;
        }
        auto sos = detail::sos_from_blocks(a);
        if (sos && !verify_sos(a, *sos)) sos.reset();
        if (sos) {
            res.verdict = Membership::member;
            res.cert.kind = CertKind::sos_decomposition;
            res.cert.sos = std::move(*sos);
            return res;
        }
        // PSD in every block but the decomposition needs coefficients outside
        // the base ring; the wedge with ring coefficients is undecided here.
        res.verdict = Membership::unknown;
        res.cert.budget_exhausted = true;
        res.cert.note = "block images are positive semidefinite but no ring-coefficient "
                        "square decomposition was found";
        return res;
    }

    // Generic presentation: attempt a gram-matrix decomposition
    // a = sum_ij H_ij e_i^* e_j with H hermitian PSD. Solve the linear
    // constraints for H, then test the particular solution.
    const int n = alg->dim;
    RingVariant v = alg->variant;
    CFrac fz = CFrac::zero(v);
    // Unknowns: H as n*n complex entries, column-stacked.
    FMat sys(n, n * n, fz);
    std::vector<AlgebraElement> star;
    for (int i = 0; i < n; ++i) star.push_back(AlgebraElement::basis(alg, i).involute());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            AlgebraElement prod = star[static_cast<std::size_t>(i)] * AlgebraElement::basis(alg, j);
            for (int c = 0; c < n; ++c)
                sys.at(c, i * n + j) = CFrac(prod.coord(c));
        }
    FVec rhs;
    for (int c = 0; c < n; ++c) rhs.push_back(CFrac(a.coord(c)));
    LinSolve sol = solve_linear(sys, rhs);
    if (sol.consistent) {
        CFrac half(Scalar(Rat(1, 2), v));
        CFrac iu(Scalar::i_unit(v));
        auto unpack = [&](const FVec& flat) {
            FMat h(n, n, fz);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    h.at(i, j) = flat[static_cast<std::size_t>(i * n + j)];
            return h;
        };
        auto hermitize = [&](const FMat& h) {
            FMat hh = h;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    hh.at(i, j) = (h.at(i, j) + conj(h.at(j, i))) * half;
            return hh;
        };
        // Solutions of the system form an affine space; the hermitian average
        // of any solution still solves it because the target is hermitian.
        FMat h0 = hermitize(unpack(sol.particular));
        std::vector<FMat> dirs;
        for (const auto& kv : sol.kernel) {
            FMat k = unpack(kv);
            FMat d1 = hermitize(k);
            if (!d1.is_zero()) dirs.push_back(std::move(d1));
            FMat d2 = hermitize(k.scaled(iu));
            if (!d2.is_zero()) dirs.push_back(std::move(d2));
        }

        std::optional<FMat> found;
        int tests = 0;
        auto try_candidate = [&](const FMat& cand) {
            if (found || tests >= budget) return;
            ++tests;
            if (psd_check(cand).verdict != FormVerdict::indefinite_or_negative) found = cand;
        };
        try_candidate(h0);
        const Rat steps[] = {Rat(1), Rat(-1), Rat(1, 2), Rat(-1, 2), Rat(2), Rat(-2),
                             Rat(1, 4), Rat(-1, 4)};
        for (const auto& d : dirs) {
            if (found) break;
            for (const Rat& c : steps)
                try_candidate(h0 + d.scaled(CFrac(Scalar(c, v))));
        }
        for (std::size_t a1 = 0; a1 < dirs.size() && !found; ++a1)
            for (std::size_t a2 = a1 + 1; a2 < dirs.size() && !found; ++a2)
                for (const Rat& c1 : steps) {
                    if (found) break;
                    for (const Rat& c2 : steps)
                        try_candidate(h0 + dirs[a1].scaled(CFrac(Scalar(c1, v))) +
                                      dirs[a2].scaled(CFrac(Scalar(c2, v))));
                }

        if (found) {
            // found = Q^* D Q; its rank-one expansion gives the squares.
            CongruenceDiag cd = congruence_diagonalize(*found);
            FMat q = invert(cd.p).value();
            std::vector<SosTerm> terms;
            bool ok = true;
            for (int k = 0; k < n && ok; ++k) {
                CFrac d = cd.diag[static_cast<std::size_t>(k)];
                if (d.is_zero()) continue;
                FVec row(static_cast<std::size_t>(n), fz);
                for (int j = 0; j < n; ++j) row[static_cast<std::size_t>(j)] = q.at(k, j);
                SVec ring_row = clear_denominators(row);
                CFrac t = fz;
                for (std::size_t j = 0; j < row.size(); ++j)
                    if (!(row[j] == fz)) {
                        t = CFrac(ring_row[j]) / row[j];
                        break;
                    }
                auto coeff = (d / (t * conj(t))).to_ring();
                if (!coeff) {
                    ok = false;
                    break;
                }
                terms.push_back({*coeff, AlgebraElement(alg, std::move(ring_row))});
            }
            if (ok && verify_sos(a, terms)) {
                res.verdict = Membership::member;
                res.cert.kind = CertKind::sos_decomposition;
                res.cert.sos = std::move(terms);
                return res;
            }
        }
    }
    res.verdict = Membership::unknown;
    res.cert.budget_exhausted = true;
    res.cert.note = "no certificate found within budget for a generic presentation";
    return res;
}

// Membership in the dual wedge (nonnegative under every positive functional).
// Exact over presentations with verified block representations.
inline MembershipResult membership_aplus_exact(const AlgebraElement& a) {
    const AlgebraPtr& alg = a.algebra();
    if (!alg->has_exact_class())
        throw std::domain_error(
            "membership_aplus_exact: presentation class does not support exact mode");
    MembershipResult res;
    if (!a.is_hermitian()) {
        res.verdict = Membership::not_member;
        res.cert.note = "element is not hermitian";
        return res;
    }
    for (std::size_t bi = 0; bi < alg->blocks.size(); ++bi) {
        FMat h = to_frac(detail::block_image(alg->blocks[bi], a));
        PsdResult psd = psd_check(h);
        if (psd.verdict == FormVerdict::indefinite_or_negative) {
            SVec ring_vec = clear_denominators(*psd.negative_witness);
            res.verdict = Membership::not_member;
            res.cert.kind = CertKind::separating_functional;
            res.cert.separating = detail::vector_state(alg, bi, ring_vec);
            res.cert.note = "vector state on a block takes a negative value";
            return res;
        }
    }
    res.verdict = Membership::member;
    res.cert.kind = CertKind::minor_chain;
    res.cert.note = "every block image is positive semidefinite";
    return res;
}

// Sampled variant: nonnegativity against a finite family of positive
// functionals closed under one layer of basis twists. A pass certifies
// membership in the sampled wedge only.
struct SampledResult {
    Membership verdict = Membership::unknown;
    std::optional<Functional> violating;  // functional in the closed family
    std::string note;
};

inline SampledResult membership_aplus_sampled(const AlgebraElement& a,
                                              const std::vector<Functional>& sample) {
    const AlgebraPtr& alg = a.algebra();
    SampledResult res;
    if (!a.is_hermitian()) {
        res.verdict = Membership::not_member;
        res.note = "element is not hermitian";
        return res;
    }
    std::vector<Functional> family;
    for (const auto& omega : sample) {
        if (omega.algebra() != alg)
            throw std::invalid_argument("membership_aplus_sampled: functional algebra mismatch");
        if (!is_positive_functional(omega).positive)
            throw std::invalid_argument(
                "membership_aplus_sampled: sample contains a non-positive functional");
        family.push_back(omega);
        for (int b = 0; b < alg->dim; ++b)
            family.push_back(functional_twist(omega, AlgebraElement::basis(alg, b)));
    }
    for (const auto& omega : family) {
        Scalar val = omega(a);
        if (!val.is_real() || (!val.is_zero() && !val.re().is_positive())) {
            res.verdict = Membership::not_member;
            res.violating = omega;
            res.note = "sampled functional takes a negative or non-real value";
            return res;
        }
    }
    res.verdict = Membership::member;
    res.note = "nonnegative under the sampled family and its basis twists";
    return res;
}

}  // namespace starmod
