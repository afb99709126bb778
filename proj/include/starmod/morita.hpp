#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tensor.hpp"

namespace starmod {

// Certification levels, weakest to strongest.  A report certifies a level
// when every line scoped at or below that level passes.
enum class MoritaLevel { ring, star, strong };

inline int morita_rank(MoritaLevel l) { return static_cast<int>(l); }

inline MoritaLevel weaker_level(MoritaLevel a, MoritaLevel b) {
    return morita_rank(a) <= morita_rank(b) ? a : b;
}

inline const char* morita_level_name(MoritaLevel l) {
    switch (l) {
        case MoritaLevel::ring: return "ring";
        case MoritaLevel::star: return "star";
        default: return "strong";
    }
}

inline std::optional<MoritaLevel> morita_level_from_name(const std::string& s) {
    if (s == "ring") return MoritaLevel::ring;
    if (s == "star") return MoritaLevel::star;
    if (s == "strong") return MoritaLevel::strong;
    return std::nullopt;
}

/**
 * Two-sided module data in one free presentation: the underlying module
 * carries the right inner product (its Gram) over right_algebra, the left
 * action of left_algebra is a representation on that carrier, and left_gram
 * stores the left-algebra-valued inner product on generator pairs, linear in
 * the first argument.
 */
struct Bimodule {
    AlgebraPtr left_algebra;
    AlgebraPtr right_algebra;
    ModulePtr module;
    Representation left_rep;
    AMat left_gram;
};

struct CheckLine {
    std::string name;
    MoritaLevel scope = MoritaLevel::ring;
    bool passed = false;
    std::string detail;
};

struct EquivalenceReport {
    MoritaLevel level = MoritaLevel::strong;
    bool passed = false;
    std::vector<CheckLine> lines;

    const CheckLine* find(const std::string& name) const {
        for (const auto& l : lines)
            if (l.name == name) return &l;
        return nullptr;
    }

    std::string first_failure() const {
        for (const auto& l : lines)
            if (!l.passed && morita_rank(l.scope) <= morita_rank(level))
                return l.name + (l.detail.empty() ? "" : ": " + l.detail);
        return "";
    }
};

struct PicardArrow {
    Bimodule bimodule;
    MoritaLevel level = MoritaLevel::strong;
    EquivalenceReport report;
};

namespace detail {

// Incremental rank over the coefficient field with early exit support.
class RankAccumulator {
public:
    explicit RankAccumulator(RingVariant v) : v_(v) {}

    int rank() const { return static_cast<int>(rows_.size()); }

    bool add(FVec w) {
        for (std::size_t t = 0; t < rows_.size(); ++t) {
            CFrac c = w[pivots_[t]];
            if (c.is_zero()) continue;
            const FVec& r = rows_[t];
            for (std::size_t j = 0; j < w.size(); ++j) w[j] -= c * r[j];
        }
        std::size_t p = w.size();
        for (std::size_t j = 0; j < w.size(); ++j)
            if (!w[j].is_zero()) {
                p = j;
                break;
            }
        if (p == w.size()) return false;
        CFrac inv = CFrac::one(v_) / w[p];
        for (auto& c : w) c *= inv;
        pivots_.push_back(p);
        rows_.push_back(std::move(w));
        return true;
    }

private:
    RingVariant v_;
    std::vector<FVec> rows_;
    std::vector<std::size_t> pivots_;
};

inline FVec flat_of_element(const AlgebraElement& x) {
    FVec out;
    out.reserve(x.coords().size());
    for (const auto& c : x.coords()) out.push_back(CFrac(c));
    return out;
}

inline FVec flat_of_column(const AMat& m, int j) {
    FVec out;
    const AlgebraPtr& alg = m.at(0, j).algebra();
    out.reserve(static_cast<std::size_t>(m.rows()) * alg->dim);
    for (int i = 0; i < m.rows(); ++i)
        for (int a = 0; a < alg->dim; ++a) out.push_back(CFrac(m.at(i, j).coord(a)));
    return out;
}

inline FVec flat_of_amat(const AMat& m) {
    FVec out;
    const AlgebraPtr& alg = m.at(0, 0).algebra();
    out.reserve(static_cast<std::size_t>(m.rows()) * m.cols() * alg->dim);
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j)
            for (int a = 0; a < alg->dim; ++a) out.push_back(CFrac(m.at(i, j).coord(a)));
    return out;
}

// Inclusion of the surviving generators of a reduced tensor presentation.
inline AMat tensor_section(const TensorModule& t) {
    const AlgebraPtr& a = t.result->algebra;
    AMat s = amat_zero(a, t.formal->rank, t.result->rank);
    for (int j = 0; j < t.result->rank; ++j)
        s.at(t.kept[static_cast<std::size_t>(j)], j) = AlgebraElement::unit(a);
    return s;
}

}  // namespace detail

/**
 * Presentation of the conjugate module: the same generators, coordinates now
 * over the left algebra, Gram given by the left inner product, and the right
 * algebra acting from the left.  The action matrix is solved from
 * a.bar(g_j) = bar(g_j a^*); solutions are unique modulo the carrier radical,
 * which is exactly the ambiguity a representation tolerates.
 */
struct ConjugatePresentation {
    ModulePtr carrier;
    Representation action;
};

inline std::optional<ConjugatePresentation> conjugate_action(const Bimodule& bm,
                                                             std::string* why = nullptr) {
    auto fail = [&](const std::string& w) {
        if (why) *why = w;
        return std::nullopt;
    };
    const AlgebraPtr& b = bm.left_rep.algebra;
    const AlgebraPtr& a = bm.module->algebra;
    const int k = bm.module->rank, da = a->dim, db = b->dim;
    if (!a->unit || !b->unit) return fail("algebras must be unital");
    if (bm.left_gram.rows() != k || bm.left_gram.cols() != k)
        return fail("left gram shape does not match the module rank");

    ModulePtr carrier;
    try {
        carrier = InnerProductModule::create(b, amat_retag(b, bm.left_gram),
                                             bm.module->display_name + " conjugate");
    } catch (const std::exception& e) {
        return fail(e.what());
    }

    // One linear system serves every right-hand side: columns of the flat map
    // (i, eb) -> flat(G . column_i(pi(eb))).
    FMat sys(k * da, k * db, CFrac::zero(a->variant));
    for (int eb = 0; eb < db; ++eb) {
        AMat moved = bm.module->gram * bm.left_rep.images[static_cast<std::size_t>(eb)];
        for (int i = 0; i < k; ++i)
            for (int r = 0; r < k; ++r)
                for (int c = 0; c < da; ++c)
                    sys.at(r * da + c, i * db + eb) = CFrac(moved.at(r, i).coord(c));
    }

    Representation rho{a, carrier, {}};
    for (int c = 0; c < da; ++c) {
        AlgebraElement astar = AlgebraElement::basis(a, c).involute();
        AMat img = amat_zero(b, k, k);
        for (int j = 0; j < k; ++j) {
            FVec rhs(static_cast<std::size_t>(k) * da, CFrac::zero(a->variant));
            for (int r = 0; r < k; ++r) {
                AlgebraElement v = bm.module->gram.at(r, j) * astar;
                for (int cc = 0; cc < da; ++cc)
                    rhs[static_cast<std::size_t>(r) * da + cc] = CFrac(v.coord(cc));
            }
            LinSolve sol = solve_linear(sys, rhs);
            if (!sol.consistent)
                return fail("right multiplication by " + a->labels[static_cast<std::size_t>(c)] +
                            " does not land in the left-algebra span of the generators");
            for (int i = 0; i < k; ++i) {
                SVec coords(static_cast<std::size_t>(db), Scalar::zero(b->variant));
                for (int bb = 0; bb < db; ++bb) {
                    auto s = sol.particular[static_cast<std::size_t>(i) * db + bb].to_ring();
                    if (!s) return fail("conjugate action does not clear to the coefficient ring");
                    coords[static_cast<std::size_t>(bb)] = *s;
                }
                img.at(i, j) = AlgebraElement(b, std::move(coords)).involute();
            }
        }
        rho.images.push_back(std::move(img));
    }
    return ConjugatePresentation{carrier, std::move(rho)};
}

/**
 * Named certification lines for a candidate equivalence bimodule.  Every line
 * is evaluated; the verdict at the requested level aggregates the lines whose
 * scope is at or below it.  Ring scope covers invertibility data (spans,
 * fullness, nondegeneracy, the compatibility of the two inner products,
 * faithfulness), star scope adds the involutive identities, strong scope adds
 * complete positivity of both inner products.
 */
inline EquivalenceReport check_equivalence_bimodule(const Bimodule& bm, MoritaLevel level) {
    EquivalenceReport rep;
    rep.level = level;

    auto add = [&rep](std::string name, MoritaLevel scope, bool ok, std::string detail = "") {
        rep.lines.push_back({std::move(name), scope, ok, std::move(detail)});
    };
    auto guarded = [&add](std::string name, MoritaLevel scope, auto&& fn) {
        try {
            auto [ok, detail] = fn();
            add(std::move(name), scope, ok, std::move(detail));
        } catch (const std::exception& e) {
            add(std::move(name), scope, false, e.what());
        }
    };

    const AlgebraPtr& a = bm.module->algebra;
    const AlgebraPtr& b = bm.left_rep.algebra;
    const ModulePtr& m = bm.module;
    const int k = m->rank, da = a->dim, db = b->dim;

    bool shapes_ok = same_presentation(bm.right_algebra, a) &&
                     same_presentation(bm.left_algebra, b) && bm.left_rep.module == m &&
                     static_cast<int>(bm.left_rep.images.size()) == db &&
                     bm.left_gram.rows() == k && bm.left_gram.cols() == k && k > 0;
    if (shapes_ok)
        for (int i = 0; i < k && shapes_ok; ++i)
            for (int j = 0; j < k && shapes_ok; ++j)
                shapes_ok = same_presentation(bm.left_gram.at(i, j).algebra(), b);
    add("presentation shapes", MoritaLevel::ring, shapes_ok);
    if (!shapes_ok) {
        rep.passed = false;
        return rep;
    }
    AMat lg = amat_retag(b, bm.left_gram);

    add("unital algebras", MoritaLevel::ring, a->unit.has_value() && b->unit.has_value());

    std::vector<SVec> rad_flat;
    for (const auto& r : radical_basis(m)) rad_flat.push_back(flatten(r));

    guarded("module spans", MoritaLevel::ring, [&]() {
        detail::RankAccumulator acc(a->variant);
        for (const auto& rv : rad_flat) {
            FVec f;
            f.reserve(rv.size());
            for (const auto& s : rv) f.push_back(CFrac(s));
            acc.add(std::move(f));
        }
        for (int eb = 0; eb < db && acc.rank() < k * da; ++eb)
            for (int i = 0; i < k && acc.rank() < k * da; ++i)
                acc.add(detail::flat_of_column(bm.left_rep.images[static_cast<std::size_t>(eb)], i));
        bool left_span = acc.rank() == k * da;
        return std::pair<bool, std::string>(
            left_span, left_span ? "left span covers the module; the right span is free"
                                 : "left action does not span the module");
    });

    guarded("inner products nondegenerate", MoritaLevel::ring, [&]() {
        int qg = k * da - static_cast<int>(rad_flat.size());
        int ql = k * db - static_cast<int>(saturated_kernel(operator_flat(lg, b)).size());
        bool ok = qg == ql;
        return std::pair<bool, std::string>(
            ok, "quotient dimensions: right " + std::to_string(qg) + ", left " + std::to_string(ql));
    });

    guarded("right inner product full", MoritaLevel::ring, [&]() {
        detail::RankAccumulator acc(a->variant);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) {
                if (m->gram.at(i, j).is_zero()) continue;
                for (int c = 0; c < da && acc.rank() < da; ++c) {
                    AlgebraElement lf = AlgebraElement::basis(a, c).involute() * m->gram.at(i, j);
                    for (int d = 0; d < da && acc.rank() < da; ++d)
                        acc.add(detail::flat_of_element(lf * AlgebraElement::basis(a, d)));
                }
                if (acc.rank() == da) break;
            }
        bool ok = acc.rank() == da;
        return std::pair<bool, std::string>(ok, "span rank " + std::to_string(acc.rank()) + " of " +
                                                    std::to_string(da));
    });

    guarded("left inner product full", MoritaLevel::ring, [&]() {
        detail::RankAccumulator acc(b->variant);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) {
                if (lg.at(i, j).is_zero()) continue;
                for (int c = 0; c < db && acc.rank() < db; ++c) {
                    AlgebraElement lf = AlgebraElement::basis(b, c) * lg.at(i, j);
                    for (int d = 0; d < db && acc.rank() < db; ++d)
                        acc.add(detail::flat_of_element(
                            lf * AlgebraElement::basis(b, d).involute()));
                }
                if (acc.rank() == db) break;
            }
        bool ok = acc.rank() == db;
        return std::pair<bool, std::string>(ok, "span rank " + std::to_string(acc.rank()) + " of " +
                                                    std::to_string(db));
    });

    guarded("compatibility", MoritaLevel::ring, [&]() {
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) {
                AMat op = rep_image(bm.left_rep, lg.at(i, j));
                for (int l = 0; l < k; ++l) {
                    AMat defect = amat_zero(a, k, 1);
                    for (int r = 0; r < k; ++r) defect.at(r, 0) = op.at(r, l);
                    defect.at(i, 0) -= m->gram.at(j, l);
                    if (!(m->gram * defect).is_zero())
                        return std::pair<bool, std::string>(
                            false, "left value of (" + std::to_string(i + 1) + "," +
                                       std::to_string(j + 1) + ") acting on generator " +
                                       std::to_string(l + 1) + " differs from the right value");
                }
            }
        return std::pair<bool, std::string>(true, "");
    });

    guarded("left action faithful", MoritaLevel::ring, [&]() {
        detail::RankAccumulator acc(a->variant);
        int r = 0;
        for (int eb = 0; eb < db; ++eb)
            if (acc.add(detail::flat_of_amat(m->gram *
                                             bm.left_rep.images[static_cast<std::size_t>(eb)])))
                ++r;
        bool ok = r == db;
        return std::pair<bool, std::string>(
            ok, ok ? "" : "kernel of the quotient action has dimension " + std::to_string(db - r));
    });

    guarded("right gram hermitian", MoritaLevel::star, [&]() {
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j)
                if (!(m->gram.at(i, j).involute() == m->gram.at(j, i)))
                    return std::pair<bool, std::string>(false, "");
        return std::pair<bool, std::string>(true, "");
    });

    guarded("left gram hermitian", MoritaLevel::star, [&]() {
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j)
                if (!(lg.at(i, j).involute() == lg.at(j, i)))
                    return std::pair<bool, std::string>(false, "");
        return std::pair<bool, std::string>(true, "");
    });

    guarded("left action star representation", MoritaLevel::star, [&]() {
        CheckReport r = check_representation(bm.left_rep);
        return std::pair<bool, std::string>(r.ok, r.ok ? "" : r.failures.front());
    });

    guarded("right action adjointable for left product", MoritaLevel::star, [&]() {
        std::string why;
        auto conj = conjugate_action(bm, &why);
        if (!conj) return std::pair<bool, std::string>(false, why);
        CheckReport r = check_representation(conj->action);
        return std::pair<bool, std::string>(r.ok, r.ok ? "" : r.failures.front());
    });

    guarded("right inner product completely positive", MoritaLevel::strong, [&]() {
        CpReport r = is_completely_positive(m);
        return std::pair<bool, std::string>(r.positive, r.detail);
    });

    guarded("left inner product completely positive", MoritaLevel::strong, [&]() {
        ModulePtr carrier =
            InnerProductModule::create(b, lg, m->display_name + " conjugate");
        CpReport r = is_completely_positive(carrier);
        return std::pair<bool, std::string>(r.positive, r.detail);
    });

    rep.passed = true;
    for (const auto& l : rep.lines)
        if (morita_rank(l.scope) <= morita_rank(level) && !l.passed) rep.passed = false;
    return rep;
}

inline PicardArrow make_arrow(Bimodule bm, MoritaLevel level, bool must_pass = false) {
    EquivalenceReport rep = check_equivalence_bimodule(bm, level);
    if (must_pass && !rep.passed)
        throw std::logic_error("equivalence certification failed at level " +
                               std::string(morita_level_name(level)) + ": " + rep.first_failure());
    return PicardArrow{std::move(bm), level, std::move(rep)};
}

// The trivial self-equivalence: the algebra over itself with <a,b> = a*b on
// the right and ab* on the left.
inline PicardArrow identity_arrow(const AlgebraPtr& alg, MoritaLevel level = MoritaLevel::strong) {
    if (!alg->unit) throw std::invalid_argument("identity_arrow: algebra must be unital");
    ModulePtr m = canonical_module(alg);
    Representation rep{alg, m, {}};
    for (int c = 0; c < alg->dim; ++c) {
        AMat im = amat_zero(alg, 1, 1);
        im.at(0, 0) = AlgebraElement::basis(alg, c);
        rep.images.push_back(std::move(im));
    }
    AMat lg = amat_zero(alg, 1, 1);
    lg.at(0, 0) = AlgebraElement::unit(alg);
    Bimodule bm{alg, alg, m, std::move(rep), std::move(lg)};
    return make_arrow(std::move(bm), level, true);
}

/**
 * The column module: rank-n free module over the base with identity Gram,
 * matrices over the base acting from the left, left inner product the rank-one
 * matrix units x y^*.
 */
inline PicardArrow column_bimodule(const AlgebraPtr& base, int n,
                                   MoritaLevel level = MoritaLevel::strong) {
    if (!base->unit) throw std::invalid_argument("column_bimodule: base algebra must be unital");
    if (n <= 0) throw std::invalid_argument("column_bimodule: rank must be positive");
    AlgebraPtr mat = matrix_algebra(base, n);
    ModulePtr m = free_module(base, n, base->display_name + "^" + std::to_string(n));
    const int d = base->dim;
    auto idx = [&](int i, int j, int a) { return (i * n + j) * d + a; };

    Representation rep{mat, m, {}};
    rep.images.assign(static_cast<std::size_t>(mat->dim), amat_zero(base, n, n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int a = 0; a < d; ++a)
                rep.images[static_cast<std::size_t>(idx(i, j, a))].at(i, j) =
                    AlgebraElement::basis(base, a);

    AMat lg = amat_zero(mat, n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            SVec coords(static_cast<std::size_t>(mat->dim), Scalar::zero(mat->variant));
            for (int a = 0; a < d; ++a)
                coords[static_cast<std::size_t>(idx(i, j, a))] =
                    (*base->unit)[static_cast<std::size_t>(a)];
            lg.at(i, j) = AlgebraElement(mat, std::move(coords));
        }
    Bimodule bm{mat, base, m, std::move(rep), std::move(lg)};
    return make_arrow(std::move(bm), level, true);
}

/**
 * Internal tensor of composable arrows.  The right inner product is the
 * reduced formal Gram; the left inner product evaluates through the conjugate
 * presentation of the left factor, where right multiplication by a
 * middle-algebra value becomes a matrix over the outer algebra.
 */
inline PicardArrow compose(const PicardArrow& f, const PicardArrow& e) {
    const Bimodule& bf = f.bimodule;
    const Bimodule& be = e.bimodule;
    if (!same_presentation(bf.right_algebra, be.left_algebra))
        throw std::invalid_argument("compose: middle algebras do not match");

    TensorModule t = internal_tensor(bf.module, be.left_rep, bf.left_rep);

    std::string why;
    auto conj = conjugate_action(bf, &why);
    if (!conj) throw std::logic_error("compose: left factor has no conjugate presentation: " + why);

    const AlgebraPtr& c = bf.left_rep.algebra;
    const int kf = bf.module->rank, ke = be.module->rank;
    AMat lformal = amat_zero(c, kf * ke, kf * ke);
    for (int i = 0; i < ke; ++i)
        for (int j = 0; j < ke; ++j) {
            AlgebraElement bstar = retag(conj->action.algebra, be.left_gram.at(i, j)).involute();
            AMat rb = rep_image(conj->action, bstar);
            for (int p = 0; p < kf; ++p)
                for (int q = 0; q < kf; ++q) {
                    AlgebraElement s = AlgebraElement::zero(c);
                    for (int r = 0; r < kf; ++r)
                        s += rb.at(r, p).involute() * bf.left_gram.at(r, q);
                    lformal.at(p * ke + i, q * ke + j) = std::move(s);
                }
        }

    const int kr = t.result->rank;
    AMat lg = amat_zero(c, kr, kr);
    for (int i = 0; i < kr; ++i)
        for (int j = 0; j < kr; ++j)
            lg.at(i, j) = lformal.at(t.kept[static_cast<std::size_t>(i)],
                                     t.kept[static_cast<std::size_t>(j)]);

    MoritaLevel level = weaker_level(f.level, e.level);
    Bimodule bm{bf.left_algebra, be.right_algebra, t.result, *t.induced, std::move(lg)};
    EquivalenceReport rep = check_equivalence_bimodule(bm, level);
    if (!rep.passed)
        throw std::logic_error("compose: the tensor product fails certification at level " +
                               std::string(morita_level_name(level)) + ": " + rep.first_failure());
    return PicardArrow{std::move(bm), level, std::move(rep)};
}

// Conjugate arrow: coordinates move to the left algebra, the two inner
// products trade places, the old right multiplication acts from the left.
inline PicardArrow inverse(const PicardArrow& arrow) {
    std::string why;
    auto conj = conjugate_action(arrow.bimodule, &why);
    if (!conj) throw std::invalid_argument("inverse: no conjugate presentation: " + why);
    Bimodule bm{arrow.bimodule.module->algebra, arrow.bimodule.left_rep.algebra, conj->carrier,
                conj->action, arrow.bimodule.module->gram};
    EquivalenceReport rep = check_equivalence_bimodule(bm, arrow.level);
    if (!rep.passed)
        throw std::logic_error("inverse: conjugate bimodule fails certification: " +
                               rep.first_failure());
    return PicardArrow{std::move(bm), arrow.level, std::move(rep)};
}

inline PicardArrow forget(const PicardArrow& arrow, MoritaLevel to_level) {
    if (morita_rank(to_level) > morita_rank(arrow.level))
        throw std::invalid_argument("forget: cannot strengthen a certification");
    return make_arrow(arrow.bimodule, to_level, false);
}

// Arrow isomorphism: a unitary module map intertwining the left actions.  The
// left inner products are carried along automatically on full bimodules, where
// they are determined by compatibility with the right ones.
inline UnitaryEquivalence arrows_isomorphic(const PicardArrow& x, const PicardArrow& y,
                                            int budget = 64) {
    if (!same_presentation(x.bimodule.left_rep.algebra, y.bimodule.left_rep.algebra) ||
        !same_presentation(x.bimodule.module->algebra, y.bimodule.module->algebra))
        throw std::invalid_argument("arrows_isomorphic: arrows join different algebras");
    return are_unitarily_equivalent(x.bimodule.left_rep, y.bimodule.left_rep, budget);
}

inline PicardArrow isotropy_action(const PicardArrow& g, const PicardArrow& h) {
    return compose(compose(g, h), inverse(g));
}

namespace detail {

inline std::optional<AlgebraElement> clear_to_element(const AlgebraPtr& alg, const FVec& v) {
    FVec scaled = v;
    for (const auto& c : v) {
        if (c.is_zero()) continue;
        Scalar den = c.den();
        if (den.is_one()) continue;
        for (auto& s : scaled) s *= CFrac(den);
    }
    SVec coords(static_cast<std::size_t>(alg->dim), Scalar::zero(alg->variant));
    for (int a = 0; a < alg->dim; ++a) {
        auto s = scaled[static_cast<std::size_t>(a)].to_ring();
        if (!s) return std::nullopt;
        coords[static_cast<std::size_t>(a)] = *s;
    }
    return AlgebraElement(alg, std::move(coords));
}

// Inner automorphism test: a unit u with u e_a = alpha(e_a) u for every basis
// element.  Candidates are cleared kernel vectors and their small sums.
inline bool automorphism_is_inner(const AlgebraPtr& alg,
                                  const std::vector<AlgebraElement>& alpha) {
    const int d = alg->dim;
    SMat sys(d * d, d, Scalar::zero(alg->variant));
    for (int a = 0; a < d; ++a) {
        SMat diff = right_mult_matrix(AlgebraElement::basis(alg, a)) -
                    left_mult_matrix(alpha[static_cast<std::size_t>(a)]);
        for (int r = 0; r < d; ++r)
            for (int cc = 0; cc < d; ++cc) sys.at(a * d + r, cc) = diff.at(r, cc);
    }
    FMat fsys(d * d, d, CFrac::zero(alg->variant));
    for (int r = 0; r < d * d; ++r)
        for (int cc = 0; cc < d; ++cc) fsys.at(r, cc) = CFrac(sys.at(r, cc));
    LinSolve sol = solve_linear(fsys, FVec(static_cast<std::size_t>(d * d),
                                           CFrac::zero(alg->variant)));
    std::vector<AlgebraElement> cands;
    for (const auto& kv : sol.kernel)
        if (auto e = clear_to_element(alg, kv)) cands.push_back(*e);
    const std::size_t singles = cands.size();
    Scalar iu = Scalar::i_unit(alg->variant);
    for (std::size_t s = 0; s < singles; ++s)
        for (std::size_t t2 = s + 1; t2 < singles; ++t2) {
            cands.push_back(cands[s] + cands[t2]);
            cands.push_back(cands[s] - cands[t2]);
            cands.push_back(cands[s] + iu * cands[t2]);
            cands.push_back(cands[s] - iu * cands[t2]);
        }
    for (const auto& u : cands) {
        auto inv = detail::ring_inverse(u);
        if (!inv) continue;
        bool ok = true;
        for (int a = 0; a < d && ok; ++a)
            ok = u * AlgebraElement::basis(alg, a) ==
                 alpha[static_cast<std::size_t>(a)] * u;
        if (ok) return true;
    }
    return false;
}

inline PicardArrow twisted_identity_arrow(const AlgebraPtr& alg,
                                          const std::vector<AlgebraElement>& alpha,
                                          const std::string& name) {
    ModulePtr m = InnerProductModule::create(alg, amat_identity(alg, 1),
                                             alg->display_name + " twisted by " + name);
    Representation rep{alg, m, {}};
    for (int c = 0; c < alg->dim; ++c) {
        AMat im = amat_zero(alg, 1, 1);
        im.at(0, 0) = alpha[static_cast<std::size_t>(c)];
        rep.images.push_back(std::move(im));
    }
    AMat lg = amat_zero(alg, 1, 1);
    lg.at(0, 0) = AlgebraElement::unit(alg);
    return make_arrow(Bimodule{alg, alg, m, std::move(rep), std::move(lg)},
                      MoritaLevel::strong, true);
}

inline bool is_star_automorphism(const AlgebraPtr& alg,
                                 const std::vector<AlgebraElement>& alpha) {
    const int d = alg->dim;
    auto image_of = [&](const AlgebraElement& x) {
        AlgebraElement r = AlgebraElement::zero(alg);
        for (int a = 0; a < d; ++a)
            if (!x.coord(a).is_zero()) r += x.coord(a) * alpha[static_cast<std::size_t>(a)];
        return r;
    };
    for (int x = 0; x < d; ++x) {
        AlgebraElement ex = AlgebraElement::basis(alg, x);
        if (!(image_of(ex.involute()) == alpha[static_cast<std::size_t>(x)].involute()))
            return false;
        for (int y = 0; y < d; ++y)
            if (!(image_of(ex * AlgebraElement::basis(alg, y)) ==
                  alpha[static_cast<std::size_t>(x)] * alpha[static_cast<std::size_t>(y)]))
                return false;
    }
    if (alg->unit && !(image_of(AlgebraElement::unit(alg)) == AlgebraElement::unit(alg)))
        return false;
    return true;
}

}  // namespace detail

/**
 * Self-equivalence classes generated from automorphism twists of the trivial
 * bimodule.  Function algebras contribute point permutations; matrix-class
 * presentations contribute permutation conjugations, which the inner test
 * collapses back to the identity.  Distinctness of the returned arrows is up
 * to the bounded solver: a candidate is dropped only on a found isomorphism.
 */
inline std::vector<PicardArrow> picard_group(const AlgebraPtr& alg,
                                             std::optional<std::string> class_hint = std::nullopt,
                                             int budget = 64) {
    if (alg->dim > 16)
        throw std::invalid_argument("picard_group: presentation too large for enumeration");
    std::string cls = class_hint.value_or(alg->class_desc);
    if (cls != "functions" && cls != "matrix")
        throw std::invalid_argument("picard_group: unsupported presentation class '" + cls + "'");
    std::vector<PicardArrow> out;
    out.push_back(identity_arrow(alg));

    auto consider = [&](const std::vector<AlgebraElement>& alpha, const std::string& name) {
        if (!detail::is_star_automorphism(alg, alpha)) return;
        if (detail::automorphism_is_inner(alg, alpha)) return;
        PicardArrow cand = detail::twisted_identity_arrow(alg, alpha, name);
        for (const auto& seen : out)
            if (arrows_isomorphic(seen, cand, budget).verdict == EquivVerdict::yes) return;
        out.push_back(std::move(cand));
    };

    if (cls == "functions") {
        const int npoints = alg->dim;
        if (npoints > 6)
            throw std::invalid_argument("picard_group: too many points to enumerate");
        std::vector<int> perm(static_cast<std::size_t>(npoints));
        std::iota(perm.begin(), perm.end(), 0);
        while (std::next_permutation(perm.begin(), perm.end())) {
            std::vector<AlgebraElement> alpha;
            for (int c = 0; c < npoints; ++c)
                alpha.push_back(AlgebraElement::basis(alg, perm[static_cast<std::size_t>(c)]));
            std::string name = "(";
            for (int c = 0; c < npoints; ++c)
                name += std::to_string(perm[static_cast<std::size_t>(c)] + 1) +
                        (c + 1 < npoints ? " " : ")");
            consider(alpha, name);
        }
        return out;
    }

    if (cls == "matrix") {
        if (alg->dim == 1) return out;
        if (alg->blocks.size() != 1 || alg->blocks[0].size * alg->blocks[0].size != alg->dim)
            throw std::invalid_argument(
                "picard_group: matrix class requires one faithful block of matching size");
        const auto& blk = alg->blocks[0];
        const int s = blk.size, d = alg->dim;
        // Invert the block isomorphism to pull conjugated images back to
        // algebra coordinates.
        FMat basis_mat(d, d, CFrac::zero(alg->variant));
        for (int a = 0; a < d; ++a)
            for (int r = 0; r < s; ++r)
                for (int c = 0; c < s; ++c)
                    basis_mat.at(r * s + c, a) =
                        CFrac(blk.images[static_cast<std::size_t>(a)].at(r, c));
        auto inv = invert(basis_mat);
        if (!inv) throw std::invalid_argument("picard_group: block is not bijective");

        std::vector<int> perm(static_cast<std::size_t>(s));
        std::iota(perm.begin(), perm.end(), 0);
        while (std::next_permutation(perm.begin(), perm.end())) {
            std::vector<AlgebraElement> alpha;
            bool valid = true;
            for (int a = 0; a < d && valid; ++a) {
                const SMat& im = blk.images[static_cast<std::size_t>(a)];
                FVec flat(static_cast<std::size_t>(d), CFrac::zero(alg->variant));
                for (int r = 0; r < s; ++r)
                    for (int c = 0; c < s; ++c)
                        flat[static_cast<std::size_t>(perm[static_cast<std::size_t>(r)] * s +
                                                      perm[static_cast<std::size_t>(c)])] =
                            CFrac(im.at(r, c));
                SVec coords(static_cast<std::size_t>(d), Scalar::zero(alg->variant));
                for (int r = 0; r < d; ++r) {
                    CFrac acc = CFrac::zero(alg->variant);
                    for (int c = 0; c < d; ++c) acc += inv->at(r, c) * flat[static_cast<std::size_t>(c)];
                    auto sc = acc.to_ring();
                    if (!sc) {
                        valid = false;
                        break;
                    }
                    coords[static_cast<std::size_t>(r)] = *sc;
                }
                if (valid) alpha.push_back(AlgebraElement(alg, std::move(coords)));
            }
            if (!valid) continue;
            std::string name = "P(";
            for (int r = 0; r < s; ++r)
                name += std::to_string(perm[static_cast<std::size_t>(r)] + 1) +
                        (r + 1 < s ? " " : ")");
            consider(alpha, name);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Hermitian K-theory classes and the groupoid actions.
// ---------------------------------------------------------------------------

struct K0Class {
    AlgebraPtr algebra;
    std::vector<std::pair<ModulePtr, int>> summands;
};

namespace detail {

// G = G X G with X over the coefficient ring: the presentation is projective
// and its quotient pairing is invertible on its support.
inline std::optional<AMat> regular_witness(const ModulePtr& m) {
    const AlgebraPtr& alg = m->algebra;
    const int k = m->rank, d = alg->dim;
    const int nunk = k * k * d;
    FMat sys(nunk, nunk, CFrac::zero(alg->variant));
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            for (int p = 0; p < k; ++p)
                for (int q = 0; q < k; ++q) {
                    if (m->gram.at(i, p).is_zero() || m->gram.at(q, j).is_zero()) continue;
                    for (int bb = 0; bb < d; ++bb) {
                        AlgebraElement v = m->gram.at(i, p) * AlgebraElement::basis(alg, bb) *
                                           m->gram.at(q, j);
                        for (int c = 0; c < d; ++c)
                            sys.at((i * k + j) * d + c, (p * k + q) * d + bb) += CFrac(v.coord(c));
                    }
                }
    FVec rhs(static_cast<std::size_t>(nunk), CFrac::zero(alg->variant));
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            for (int c = 0; c < d; ++c)
                rhs[static_cast<std::size_t>((i * k + j) * d + c)] =
                    CFrac(m->gram.at(i, j).coord(c));
    LinSolve sol = solve_linear(sys, rhs);
    if (!sol.consistent) return std::nullopt;
    AMat x = amat_zero(alg, k, k);
    for (int p = 0; p < k; ++p)
        for (int q = 0; q < k; ++q) {
            SVec coords(static_cast<std::size_t>(d), Scalar::zero(alg->variant));
            for (int bb = 0; bb < d; ++bb) {
                auto s = sol.particular[static_cast<std::size_t>((p * k + q) * d + bb)].to_ring();
                if (!s) return std::nullopt;
                coords[static_cast<std::size_t>(bb)] = *s;
            }
            x.at(p, q) = AlgebraElement(alg, std::move(coords));
        }
    if (!(m->gram * x * m->gram == m->gram)) return std::nullopt;
    return x;
}

}  // namespace detail

/**
 * Canonical form: summands validated (projective pairing with a regular
 * witness, completely positive), merged along found isometric isomorphisms,
 * zero multiplicities dropped, sorted by rank.  Merging is up to the bounded
 * solver; unresolved pairs stay separate.
 */
inline K0Class k0_class(const AlgebraPtr& alg,
                        std::vector<std::pair<ModulePtr, int>> raw) {
    std::vector<std::pair<ModulePtr, int>> canon;
    for (auto& [m, mult] : raw) {
        if (mult == 0) continue;
        if (!same_presentation(m->algebra, alg))
            throw std::invalid_argument("k0_class: summand over a different algebra");
        if (!detail::regular_witness(m))
            throw std::invalid_argument("k0_class: summand '" + m->display_name +
                                        "' is not projective with invertible pairing");
        CpReport cp = is_completely_positive(m);
        if (!cp.positive)
            throw std::invalid_argument("k0_class: summand '" + m->display_name +
                                        "' has a non positive inner product");
        bool merged = false;
        for (auto& [cm, cmult] : canon) {
            if (cm->rank != m->rank) continue;
            if (find_isometric_isomorphism(m, cm, {}).witness) {
                cmult += mult;
                merged = true;
                break;
            }
        }
        if (!merged) canon.emplace_back(m, mult);
    }
    canon.erase(std::remove_if(canon.begin(), canon.end(),
                               [](const auto& p) { return p.second == 0; }),
                canon.end());
    std::stable_sort(canon.begin(), canon.end(),
                     [](const auto& x, const auto& y) { return x.first->rank < y.first->rank; });
    return K0Class{alg, std::move(canon)};
}

inline K0Class k0_add(const K0Class& x, const K0Class& y) {
    if (!same_presentation(x.algebra, y.algebra))
        throw std::invalid_argument("k0_add: classes over different algebras");
    std::vector<std::pair<ModulePtr, int>> all = x.summands;
    all.insert(all.end(), y.summands.begin(), y.summands.end());
    return k0_class(x.algebra, std::move(all));
}

// Tensoring each summand along the arrow; multiplicities ride along and the
// result is re-canonicalized over the right algebra.
inline K0Class k0h_action(const K0Class& c, const PicardArrow& e) {
    if (!same_presentation(c.algebra, e.bimodule.left_rep.algebra))
        throw std::invalid_argument("k0h_action: class algebra is not the arrow's left algebra");
    if (e.level != MoritaLevel::strong)
        throw std::invalid_argument("k0h_action: the action is defined along strong arrows");
    std::vector<std::pair<ModulePtr, int>> moved;
    for (const auto& [m, mult] : c.summands) {
        TensorModule t = internal_tensor(m, e.bimodule.left_rep);
        moved.emplace_back(t.result, mult);
    }
    return k0_class(e.bimodule.module->algebra, std::move(moved));
}

// ---------------------------------------------------------------------------
// Transfer of representations along an arrow.
// ---------------------------------------------------------------------------

struct TransferResult {
    TensorModule tensor;
    Representation induced;
};

inline TransferResult rep_transfer(const PicardArrow& e, const Representation& rho) {
    if (!same_presentation(rho.algebra, e.bimodule.module->algebra))
        throw std::invalid_argument(
            "rep_transfer: representation is not over the arrow's right algebra");
    const ModulePtr& h = rho.module;
    const int kh = h->rank, dd = h->algebra->dim;
    detail::RankAccumulator acc(h->algebra->variant);
    for (const auto& r : radical_basis(h)) {
        FVec f;
        for (const auto& s : flatten(r)) f.push_back(CFrac(s));
        acc.add(std::move(f));
    }
    for (int a = 0; a < rho.algebra->dim && acc.rank() < kh * dd; ++a)
        for (int i = 0; i < kh && acc.rank() < kh * dd; ++i)
            acc.add(detail::flat_of_column(rho.images[static_cast<std::size_t>(a)], i));
    if (acc.rank() != kh * dd)
        throw std::invalid_argument("rep_transfer: the representation is degenerate");
    TensorModule t = internal_tensor(e.bimodule.module, rho, e.bimodule.left_rep);
    Representation ind = *t.induced;
    return TransferResult{std::move(t), std::move(ind)};
}

// id (x) T on the transferred carriers; intertwining survives the quotient.
inline ModuleOperator transfer_intertwiner(const TransferResult& src, const TransferResult& tgt,
                                           const ModuleOperator& t) {
    if (t.source != src.tensor.middle_action.module ||
        t.target != tgt.tensor.middle_action.module)
        throw std::invalid_argument(
            "transfer_intertwiner: operator endpoints do not match the transfers");
    const int kf = src.tensor.left_factor->rank;
    if (kf != tgt.tensor.left_factor->rank)
        throw std::invalid_argument("transfer_intertwiner: transfers are along different arrows");
    const AlgebraPtr& dalg = src.tensor.result->algebra;
    const int ks = src.tensor.middle_action.module->rank;
    const int kt = tgt.tensor.middle_action.module->rank;
    AMat formal = amat_zero(dalg, kf * kt, kf * ks);
    for (int p = 0; p < kf; ++p)
        for (int ii = 0; ii < kt; ++ii)
            for (int jj = 0; jj < ks; ++jj)
                formal.at(p * kt + ii, p * ks + jj) = retag(dalg, t.matrix.at(ii, jj));
    AMat moved = tgt.tensor.quotient_map * (formal * detail::tensor_section(src.tensor));
    ModuleOperator op{src.tensor.result, tgt.tensor.result, std::move(moved), std::nullopt};
    if (auto adj = adjoint(op)) op.adjoint_matrix = adj->matrix;
    return op;
}

}  // namespace starmod
