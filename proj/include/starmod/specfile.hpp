#pragma once

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <starmod/deform.hpp>
#include <starmod/gns.hpp>

namespace starmod {

/**
 * Workspace file grammar.  A file is a sequence of named blocks
 *
 *   kind name { key: value ... }        kind in {algebra, module, bimodule,
 *                                                functional, star}
 *
 * Values are atoms (scalar or element literals, identifiers, integers),
 * bracketed arrays, or braced objects.  Atoms run to the next comma,
 * bracket, brace, or end of line outside parentheses, so literals like
 * "(1/2)l^2 - i l^3" need no quoting.  '#' starts a comment.  Names are
 * global across kinds; references must be defined earlier (across files,
 * in load order), which keeps resolution acyclic by construction.
 */
class SpecFileError : public std::runtime_error {
public:
    SpecFileError(int code, const std::string& what) : std::runtime_error(what), code_(code) {}
    int exit_code() const { return code_; }

private:
    int code_;
};

namespace specdet {

[[noreturn]] inline void parse_fail(const std::string& file, int line, const std::string& msg) {
    throw SpecFileError(64, file + ":" + std::to_string(line) + ": " + msg);
}

[[noreturn]] inline void ref_fail(const std::string& file, int line, const std::string& msg) {
    throw SpecFileError(65, file + ":" + std::to_string(line) + ": " + msg);
}

[[noreturn]] inline void check_fail(const std::string& file, int line, const std::string& msg) {
    throw SpecFileError(1, file + ":" + std::to_string(line) + ": " + msg);
}

}  // namespace specdet

struct SpecValue {
    enum class Kind { atom, array, object };
    Kind kind = Kind::atom;
    std::string text;
    std::vector<SpecValue> items;
    std::vector<std::pair<std::string, SpecValue>> fields;
    int line = 1;

    const SpecValue* field(const std::string& key) const {
        for (const auto& [k, v] : fields)
            if (k == key) return &v;
        return nullptr;
    }
};

class SpecParser {
public:
    struct Block {
        std::string kind;
        std::string name;
        SpecValue body;
        int line = 1;
    };

    SpecParser(std::string text, std::string file) : src_(std::move(text)), file_(std::move(file)) {}

    std::vector<Block> parse_file() {
        std::vector<Block> out;
        skip_ws();
        while (!eof()) {
            Block b;
            b.line = line_;
            b.kind = ident("block kind");
            skip_ws();
            b.name = ident("block name");
            skip_ws();
            expect('{');
            b.body = object_body();
            out.push_back(std::move(b));
            skip_ws();
        }
        return out;
    }

private:
    std::string src_, file_;
    std::size_t pos_ = 0;
    int line_ = 1;

    bool eof() const { return pos_ >= src_.size(); }
    char peek() const { return src_[pos_]; }

    char advance() {
        char c = src_[pos_++];
        if (c == '\n') ++line_;
        return c;
    }

    [[noreturn]] void fail(const std::string& msg) { specdet::parse_fail(file_, line_, msg); }

    void skip_ws() {
        while (!eof()) {
            char c = peek();
            if (c == '#') {
                while (!eof() && peek() != '\n') advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                return;
            }
        }
    }

    void expect(char c) {
        if (eof() || peek() != c) fail(std::string("expected '") + c + "'");
        advance();
    }

    static bool ident_start(char c) {
        return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
    }
    static bool ident_char(char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    }

    std::string ident(const char* what) {
        if (eof() || !ident_start(peek())) fail(std::string("expected ") + what);
        std::string s;
        while (!eof() && ident_char(peek())) s += advance();
        return s;
    }

    // Raw text to the next delimiter outside parentheses; inner spaces kept.
    std::string atom_text() {
        std::string s;
        int depth = 0;
        while (!eof()) {
            char c = peek();
            if (depth == 0 && (c == ',' || c == ']' || c == '}' || c == '\n' || c == '#')) break;
            if (c == '[' || c == '{') fail("unexpected nesting inside a literal");
            if (c == '(') ++depth;
            if (c == ')') --depth;
            s += advance();
        }
        if (depth != 0) fail("unbalanced parentheses in literal");
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
        if (s.empty()) fail("expected a value");
        return s;
    }

    SpecValue value() {
        skip_ws();
        if (eof()) fail("expected a value");
        SpecValue v;
        v.line = line_;
        if (peek() == '[') {
            advance();
            v.kind = SpecValue::Kind::array;
            skip_ws();
            while (!eof() && peek() != ']') {
                v.items.push_back(value());
                skip_ws();
                if (!eof() && peek() == ',') {
                    advance();
                    skip_ws();
                }
            }
            expect(']');
        } else if (peek() == '{') {
            advance();
            v = object_body();
            v.line = line_;
        } else {
            v.kind = SpecValue::Kind::atom;
            v.text = atom_text();
        }
        return v;
    }

    // Fields up to the closing brace; the opening brace is already consumed.
    SpecValue object_body() {
        SpecValue v;
        v.kind = SpecValue::Kind::object;
        v.line = line_;
        skip_ws();
        while (!eof() && peek() != '}') {
            int kl = line_;
            std::string key = ident("a key");
            skip_ws();
            expect(':');
            SpecValue val = value();
            val.line = kl;
            for (const auto& [k, unused] : v.fields)
                if (k == key) fail("duplicate key '" + key + "'");
            v.fields.emplace_back(std::move(key), std::move(val));
            skip_ws();
            if (!eof() && peek() == ',') {
                advance();
                skip_ws();
            }
        }
        expect('}');
        return v;
    }
};

// ---------------------------------------------------------------------------
// Element literals: signed sums of  label | scalar | scalar*label.  A bare
// scalar means scalar times the unit.  Coefficients containing a top-level
// sum must be parenthesized.

namespace specdet {

inline std::vector<std::pair<int, std::string>> split_terms(const std::string& text) {
    std::vector<std::pair<int, std::string>> terms;
    int depth = 0, sign = 1;
    std::string cur;
    auto flush = [&](int next_sign) {
        while (!cur.empty() && std::isspace(static_cast<unsigned char>(cur.back()))) cur.pop_back();
        std::size_t b = 0;
        while (b < cur.size() && std::isspace(static_cast<unsigned char>(cur[b]))) ++b;
        cur = cur.substr(b);
        if (!cur.empty()) terms.emplace_back(sign, cur);
        cur.clear();
        sign = next_sign;
    };
    for (char c : text) {
        if (c == '(') ++depth;
        if (c == ')') --depth;
        if (depth == 0 && (c == '+' || c == '-')) {
            int s = c == '+' ? 1 : -1;
            if (cur.find_first_not_of(" \t") == std::string::npos) {
                sign *= s;  // leading or stacked sign
                cur.clear();
            } else {
                flush(s);
            }
            continue;
        }
        cur += c;
    }
    flush(1);
    return terms;
}

inline std::string strip(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

}  // namespace specdet

inline AlgebraElement parse_element(const AlgebraPtr& alg, const std::string& text) {
    AlgebraElement out = AlgebraElement::zero(alg);
    Scalar minus = Scalar::zero(alg->variant) - Scalar::one(alg->variant);
    for (const auto& [sign, term] : specdet::split_terms(text)) {
        Scalar coeff = Scalar::one(alg->variant);
        std::string body = term;
        int depth = 0;
        std::size_t star = std::string::npos;
        for (std::size_t k = 0; k < term.size(); ++k) {
            if (term[k] == '(') ++depth;
            if (term[k] == ')') --depth;
            if (depth == 0 && term[k] == '*') {
                star = k;
                break;
            }
        }
        if (star != std::string::npos) {
            coeff = parse_scalar(specdet::strip(term.substr(0, star)), alg->variant);
            body = specdet::strip(term.substr(star + 1));
            int idx = alg->label_index(body);
            if (idx < 0)
                throw std::invalid_argument("element literal: unknown basis label '" + body + "'");
            if (sign < 0) coeff = minus * coeff;
            out += coeff * AlgebraElement::basis(alg, idx);
            continue;
        }
        int idx = alg->label_index(body);
        if (idx >= 0) {
            AlgebraElement e = AlgebraElement::basis(alg, idx);
            out += sign < 0 ? minus * e : e;
            continue;
        }
        Scalar c = parse_scalar(body, alg->variant);
        if (sign < 0) c = minus * c;
        if (c.is_zero()) continue;
        if (!alg->unit)
            throw std::invalid_argument(
                "element literal: bare scalar over an algebra without unit");
        out += c * AlgebraElement::unit(alg);
        continue;
    }
    return out;
}

inline std::string print_element(const AlgebraElement& x) {
    const AlgebraPtr& alg = x.algebra();
    if (x.is_zero()) return "0";

    auto needs_parens = [](const std::string& s) {
        for (std::size_t k = 1; k < s.size(); ++k)
            if (s[k] == '+' || s[k] == '-') return true;
        return false;
    };

    // Scalar multiples of the unit print as the bare scalar.
    if (alg->unit) {
        int lead = -1;
        for (int a = 0; a < alg->dim; ++a)
            if (!(*alg->unit)[static_cast<std::size_t>(a)].is_zero()) {
                lead = a;
                break;
            }
        if (lead >= 0 && !x.coord(lead).is_zero()) {
            bool match = true;
            Scalar r = x.coord(lead);
            Scalar ru = (*alg->unit)[static_cast<std::size_t>(lead)];
            if (ru == Scalar::one(alg->variant)) {
                for (int a = 0; a < alg->dim && match; ++a)
                    if (!(x.coord(a) == r * (*alg->unit)[static_cast<std::size_t>(a)]))
                        match = false;
                if (match) {
                    std::string s = print_scalar(r);
                    return needs_parens(s) ? "(" + s + ")" : s;
                }
            }
        }
    }

    std::string out;
    Scalar one = Scalar::one(alg->variant);
    Scalar minus = Scalar::zero(alg->variant) - one;
    for (int a = 0; a < alg->dim; ++a) {
        Scalar c = x.coord(a);
        if (c.is_zero()) continue;
        bool neg = c == minus;
        std::string body;
        if (c == one || neg) {
            body = alg->labels[static_cast<std::size_t>(a)];
        } else {
            std::string s = print_scalar(c);
            if (needs_parens(s)) s = "(" + s + ")";
            body = s + "*" + alg->labels[static_cast<std::size_t>(a)];
        }
        if (out.empty()) {
            out = neg ? "-" + body : body;
        } else {
            out += neg ? " - " + body : " + " + body;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Workspace: the named registry a CLI invocation works against.

struct Workspace {
    std::map<std::string, AlgebraPtr> algebras;
    std::map<std::string, ModulePtr> modules;
    std::map<std::string, Representation> actions;  // per module name, when declared
    std::map<std::string, Bimodule> bimodules;
    std::map<std::string, Functional> functionals;
    std::map<std::string, FormalFunctional> moments;
    std::map<std::string, StarProduct> stars;
    std::set<std::string> names;

    const AlgebraPtr& algebra(const std::string& n, const std::string& file = "<args>",
                              int line = 0) const {
        auto it = algebras.find(n);
        if (it == algebras.end()) specdet::ref_fail(file, line, "unknown algebra '" + n + "'");
        return it->second;
    }
    const ModulePtr& module(const std::string& n, const std::string& file = "<args>",
                            int line = 0) const {
        auto it = modules.find(n);
        if (it == modules.end()) specdet::ref_fail(file, line, "unknown module '" + n + "'");
        return it->second;
    }
    const Bimodule& bimodule(const std::string& n, const std::string& file = "<args>",
                             int line = 0) const {
        auto it = bimodules.find(n);
        if (it == bimodules.end()) specdet::ref_fail(file, line, "unknown bimodule '" + n + "'");
        return it->second;
    }
    const Functional& functional(const std::string& n, const std::string& file = "<args>",
                                 int line = 0) const {
        auto it = functionals.find(n);
        if (it == functionals.end())
            specdet::ref_fail(file, line, "unknown functional '" + n + "'");
        return it->second;
    }
    const FormalFunctional& moment_functional(const std::string& n,
                                              const std::string& file = "<args>",
                                              int line = 0) const {
        auto it = moments.find(n);
        if (it == moments.end())
            specdet::ref_fail(file, line, "unknown moment functional '" + n + "'");
        return it->second;
    }
    const StarProduct& star(const std::string& n, const std::string& file = "<args>",
                            int line = 0) const {
        auto it = stars.find(n);
        if (it == stars.end()) specdet::ref_fail(file, line, "unknown star product '" + n + "'");
        return it->second;
    }
};

namespace specdet {

inline int parse_int(const SpecValue& v, const std::string& file) {
    if (v.kind != SpecValue::Kind::atom) parse_fail(file, v.line, "expected an integer");
    try {
        std::size_t used = 0;
        int n = std::stoi(v.text, &used);
        if (used != v.text.size()) parse_fail(file, v.line, "expected an integer");
        return n;
    } catch (const SpecFileError&) {
        throw;
    } catch (const std::exception&) {
        parse_fail(file, v.line, "expected an integer, got '" + v.text + "'");
    }
}

inline const SpecValue& require(const SpecValue& body, const std::string& key,
                                const std::string& file) {
    const SpecValue* f = body.field(key);
    if (!f) parse_fail(file, body.line, "missing key '" + key + "'");
    return *f;
}

inline void allow_keys(const SpecValue& body, std::initializer_list<const char*> keys,
                       const std::string& file) {
    for (const auto& [k, v] : body.fields) {
        bool ok = false;
        for (const char* a : keys)
            if (k == a) ok = true;
        if (!ok) parse_fail(file, v.line, "unknown key '" + k + "'");
    }
}

inline const SpecValue& expect_array(const SpecValue& v, std::size_t n, const std::string& what,
                                     const std::string& file) {
    if (v.kind != SpecValue::Kind::array)
        parse_fail(file, v.line, "expected an array for " + what);
    if (v.items.size() != n)
        parse_fail(file, v.line, what + " needs " + std::to_string(n) + " entries, got " +
                                     std::to_string(v.items.size()));
    return v;
}

inline Scalar atom_scalar(const SpecValue& v, RingVariant variant, const std::string& file) {
    if (v.kind != SpecValue::Kind::atom) parse_fail(file, v.line, "expected a scalar literal");
    try {
        return parse_scalar(v.text, variant);
    } catch (const std::exception& e) {
        parse_fail(file, v.line, std::string("bad scalar literal: ") + e.what());
    }
}

inline AlgebraElement atom_element(const SpecValue& v, const AlgebraPtr& alg,
                                   const std::string& file) {
    if (v.kind != SpecValue::Kind::atom) parse_fail(file, v.line, "expected an element literal");
    try {
        return parse_element(alg, v.text);
    } catch (const std::exception& e) {
        parse_fail(file, v.line, std::string("bad element literal: ") + e.what());
    }
}

inline AMat element_matrix(const SpecValue& v, const AlgebraPtr& alg, int rows, int cols,
                           const std::string& what, const std::string& file) {
    expect_array(v, static_cast<std::size_t>(rows), what, file);
    AMat m = amat_zero(alg, rows, cols);
    for (int i = 0; i < rows; ++i) {
        const SpecValue& row = v.items[static_cast<std::size_t>(i)];
        expect_array(row, static_cast<std::size_t>(cols), what + " row", file);
        for (int j = 0; j < cols; ++j)
            m.at(i, j) = atom_element(row.items[static_cast<std::size_t>(j)], alg, file);
    }
    return m;
}

inline std::vector<int> int_vector(const SpecValue& v, std::size_t n, const std::string& what,
                                   const std::string& file) {
    expect_array(v, n, what, file);
    std::vector<int> out;
    for (const auto& it : v.items) out.push_back(parse_int(it, file));
    return out;
}

// The one-dimensional scalar presentation; the only hand-written block that
// may claim class matrix.
inline bool scalar_shaped(const AlgebraPresentation& p) {
    if (p.dim != 1 || !p.unit) return false;
    Scalar one = Scalar::one(p.variant);
    const auto& sv = p.structure[0];
    if (sv.size() != 1 || sv[0].idx != 0 || !(sv[0].c == one)) return false;
    if (!(p.involution.at(0, 0) == one)) return false;
    return (*p.unit)[0] == one;
}

inline void register_name(Workspace& ws, const std::string& name, const std::string& file,
                          int line) {
    if (!ws.names.insert(name).second)
        ref_fail(file, line, "duplicate name '" + name + "'");
}

inline void load_algebra(Workspace& ws, const SpecParser::Block& b, const std::string& file) {
    const SpecValue& body = b.body;
    allow_keys(body,
               {"ring", "dim", "labels", "structure", "involution", "unit", "class", "matrix_over",
                "n"},
               file);
    RingVariant variant = RingVariant::rational;
    if (const SpecValue* r = body.field("ring")) {
        if (r->text == "lambda")
            variant = RingVariant::lambda_poly;
        else if (r->text != "rational")
            parse_fail(file, r->line, "ring must be rational or lambda");
    }

    AlgebraPtr alg;
    if (const SpecValue* over = body.field("matrix_over")) {
        for (const char* k : {"dim", "labels", "structure", "involution", "unit", "class"})
            if (body.field(k))
                parse_fail(file, body.line,
                           std::string("matrix_over excludes key '") + k + "'");
        int n = parse_int(require(body, "n", file), file);
        if (n <= 0) parse_fail(file, body.line, "n must be positive");
        const AlgebraPtr& base = ws.algebra(over->text, file, over->line);
        alg = matrix_algebra(base, n);
    } else {
        int dim = parse_int(require(body, "dim", file), file);
        if (dim <= 0) parse_fail(file, body.line, "dim must be positive");
        auto p = AlgebraPresentation::create();
        p->display_name = b.name;
        p->variant = variant;
        p->dim = dim;

        const SpecValue& labels =
            expect_array(require(body, "labels", file), static_cast<std::size_t>(dim), "labels",
                         file);
        std::set<std::string> seen;
        for (const auto& l : labels.items) {
            if (l.kind != SpecValue::Kind::atom) parse_fail(file, l.line, "labels are atoms");
            if (!seen.insert(l.text).second)
                parse_fail(file, l.line, "duplicate label '" + l.text + "'");
            p->labels.push_back(l.text);
        }

        const SpecValue& st = expect_array(require(body, "structure", file),
                                           static_cast<std::size_t>(dim), "structure", file);
        p->structure.assign(static_cast<std::size_t>(dim) * dim, {});
        for (int a = 0; a < dim; ++a) {
            const SpecValue& row =
                expect_array(st.items[static_cast<std::size_t>(a)], static_cast<std::size_t>(dim),
                             "structure row", file);
            for (int bidx = 0; bidx < dim; ++bidx) {
                const SpecValue& cell =
                    expect_array(row.items[static_cast<std::size_t>(bidx)],
                                 static_cast<std::size_t>(dim), "structure cell", file);
                AlgebraPresentation::SparseVec terms;
                for (int c = 0; c < dim; ++c) {
                    Scalar s =
                        atom_scalar(cell.items[static_cast<std::size_t>(c)], variant, file);
                    if (!s.is_zero()) terms.push_back({c, s});
                }
                p->structure[static_cast<std::size_t>(a) * dim + bidx] = std::move(terms);
            }
        }

        const SpecValue& inv = expect_array(require(body, "involution", file),
                                            static_cast<std::size_t>(dim), "involution", file);
        p->involution = SMat(dim, dim, Scalar::zero(variant));
        for (int a = 0; a < dim; ++a) {
            const SpecValue& row =
                expect_array(inv.items[static_cast<std::size_t>(a)],
                             static_cast<std::size_t>(dim), "involution row", file);
            for (int c = 0; c < dim; ++c)
                p->involution.at(a, c) =
                    atom_scalar(row.items[static_cast<std::size_t>(c)], variant, file);
        }

        if (const SpecValue* u = body.field("unit")) {
            expect_array(*u, static_cast<std::size_t>(dim), "unit", file);
            SVec uv;
            for (const auto& it : u->items) uv.push_back(atom_scalar(it, variant, file));
            p->unit = std::move(uv);
        }

        std::string cls = "generic";
        if (const SpecValue* c = body.field("class")) cls = c->text;
        if (cls == "functions") {
            AlgebraPtr model = function_algebra(dim, variant);
            if (!same_presentation(AlgebraPtr(p), model))
                check_fail(file, body.line,
                           "class functions requires pointwise structure, identity involution "
                           "and all-ones unit");
            p->blocks = model->blocks;
            p->class_desc = "functions";
        } else if (cls == "matrix") {
            if (!scalar_shaped(*p))
                parse_fail(file, body.line,
                           "class matrix is reserved for matrix_over blocks and the "
                           "one-dimensional scalars");
            p->blocks.push_back(
                {1, {SMat::identity(1, Scalar::zero(variant), Scalar::one(variant))}});
            p->class_desc = "matrix";
        } else if (cls != "generic") {
            parse_fail(file, body.line, "class must be matrix, functions or generic");
        }
        alg = p;
    }

    StarCheckReport rep = check_star_algebra(alg);
    if (!rep.ok)
        check_fail(file, body.line,
                   "algebra '" + b.name + "' fails its axioms: " + rep.failures.front());
    register_name(ws, b.name, file, b.line);
    ws.algebras.emplace(b.name, alg);
}

inline void load_module(Workspace& ws, const SpecParser::Block& b, const std::string& file) {
    const SpecValue& body = b.body;
    allow_keys(body, {"over", "rank", "gram", "representation"}, file);
    const SpecValue& over = require(body, "over", file);
    const AlgebraPtr& alg = ws.algebra(over.text, file, over.line);
    int rank = parse_int(require(body, "rank", file), file);
    if (rank <= 0) parse_fail(file, body.line, "rank must be positive");
    AMat gram = element_matrix(require(body, "gram", file), alg, rank, rank, "gram", file);

    ModulePtr m;
    try {
        m = InnerProductModule::create(alg, gram, b.name);
    } catch (const std::invalid_argument& e) {
        check_fail(file, body.line, e.what());
    }

    if (const SpecValue* rv = body.field("representation")) {
        if (rv->kind != SpecValue::Kind::object)
            parse_fail(file, rv->line, "representation must be an object");
        allow_keys(*rv, {"of", "images"}, file);
        const SpecValue& of = require(*rv, "of", file);
        const AlgebraPtr& racting = ws.algebra(of.text, file, of.line);
        const SpecValue& ims = expect_array(require(*rv, "images", file),
                                            static_cast<std::size_t>(racting->dim),
                                            "representation images", file);
        Representation rho{racting, m, {}};
        for (const auto& im : ims.items)
            rho.images.push_back(element_matrix(im, alg, rank, rank, "image", file));
        CheckReport rep = check_representation(rho);
        if (!rep.ok)
            check_fail(file, rv->line,
                       "representation on '" + b.name + "' fails: " + rep.failures.front());
        ws.actions.emplace(b.name, std::move(rho));
    }
    register_name(ws, b.name, file, b.line);
    ws.modules.emplace(b.name, std::move(m));
}

inline void load_bimodule(Workspace& ws, const SpecParser::Block& b, const std::string& file) {
    const SpecValue& body = b.body;
    allow_keys(body, {"left", "module", "action", "left_gram"}, file);
    const SpecValue& left = require(body, "left", file);
    const AlgebraPtr& lalg = ws.algebra(left.text, file, left.line);
    const SpecValue& mod = require(body, "module", file);
    const ModulePtr& m = ws.module(mod.text, file, mod.line);

    Representation rho{lalg, m, {}};
    if (const SpecValue* act = body.field("action")) {
        const SpecValue& ims = expect_array(*act, static_cast<std::size_t>(lalg->dim),
                                            "action images", file);
        for (const auto& im : ims.items)
            rho.images.push_back(element_matrix(im, m->algebra, m->rank, m->rank, "image", file));
        CheckReport rep = check_representation(rho);
        if (!rep.ok)
            check_fail(file, act->line,
                       "left action of '" + b.name + "' fails: " + rep.failures.front());
    } else {
        auto it = ws.actions.find(mod.text);
        if (it == ws.actions.end() || !same_presentation(it->second.algebra, lalg))
            specdet::ref_fail(file, body.line,
                              "module '" + mod.text + "' carries no action of '" + left.text +
                                  "'");
        rho = it->second;
    }

    AMat lgram =
        element_matrix(require(body, "left_gram", file), lalg, m->rank, m->rank, "left_gram",
                       file);
    register_name(ws, b.name, file, b.line);
    ws.bimodules.emplace(b.name, Bimodule{lalg, m->algebra, m, std::move(rho), std::move(lgram)});
}

inline void load_functional(Workspace& ws, const SpecParser::Block& b, const std::string& file) {
    const SpecValue& body = b.body;
    allow_keys(body, {"over", "values", "vars", "moments"}, file);
    const SpecValue* over = body.field("over");
    const SpecValue* vars = body.field("vars");
    if ((over != nullptr) == (vars != nullptr))
        parse_fail(file, body.line, "functional takes exactly one of 'over' or 'vars'");

    if (over) {
        const AlgebraPtr& alg = ws.algebra(over->text, file, over->line);
        const SpecValue& vals = expect_array(require(body, "values", file),
                                             static_cast<std::size_t>(alg->dim), "values", file);
        SVec v;
        for (const auto& it : vals.items) v.push_back(atom_scalar(it, alg->variant, file));
        register_name(ws, b.name, file, b.line);
        ws.functionals.emplace(b.name, Functional(alg, std::move(v)));
        return;
    }

    int n = parse_int(*vars, file);
    if (n <= 0) parse_fail(file, vars->line, "vars must be positive");
    FormalFunctional f;
    f.vars = n;
    const SpecValue& ms = require(body, "moments", file);
    if (ms.kind != SpecValue::Kind::array) parse_fail(file, ms.line, "moments must be an array");
    for (const auto& entry : ms.items) {
        expect_array(entry, 2, "moment entry", file);
        std::vector<int> mono = int_vector(entry.items[0], static_cast<std::size_t>(2 * n),
                                           "monomial multi-index", file);
        for (int e : mono)
            if (e < 0) parse_fail(file, entry.line, "exponents are nonnegative");
        Scalar val = atom_scalar(entry.items[1], RingVariant::lambda_poly, file);
        if (!f.values.emplace(std::move(mono), std::move(val)).second)
            parse_fail(file, entry.line, "duplicate monomial in moments");
    }
    register_name(ws, b.name, file, b.line);
    ws.moments.emplace(b.name, std::move(f));
}

inline void load_star(Workspace& ws, const SpecParser::Block& b, const std::string& file) {
    const SpecValue& body = b.body;
    allow_keys(body, {"vars", "order", "kind", "cochains"}, file);
    int vars = parse_int(require(body, "vars", file), file);
    int order = parse_int(require(body, "order", file), file);
    if (vars <= 0 || order < 0) parse_fail(file, body.line, "vars must be positive, order >= 0");

    const SpecValue* kind = body.field("kind");
    const SpecValue* coch = body.field("cochains");
    StarProduct s;
    if (coch) {
        if (kind) parse_fail(file, kind->line, "kind and cochains are exclusive");
        s.vars = vars;
        s.order = order;
        s.poisson = poisson_bidiff(vars, RingVariant::lambda_poly);
        const SpecValue& arr =
            expect_array(*coch, static_cast<std::size_t>(order), "cochains", file);
        for (const auto& one : arr.items) {
            if (one.kind != SpecValue::Kind::array)
                parse_fail(file, one.line, "a cochain is an array of terms");
            Bidiff op;
            for (const auto& term : one.items) {
                expect_array(term, 3, "cochain term", file);
                BidiffTerm t;
                t.df = int_vector(term.items[0], static_cast<std::size_t>(2 * vars),
                                  "derivative multi-index", file);
                t.dg = int_vector(term.items[1], static_cast<std::size_t>(2 * vars),
                                  "derivative multi-index", file);
                t.coeff = atom_scalar(term.items[2], RingVariant::lambda_poly, file);
                op.push_back(std::move(t));
            }
            s.cochains.push_back(std::move(op));
        }
    } else {
        if (kind && kind->text != "moyal")
            parse_fail(file, kind->line, "kind must be moyal (or give explicit cochains)");
        s = moyal_star(vars, order);
    }
    register_name(ws, b.name, file, b.line);
    ws.stars.emplace(b.name, std::move(s));
}

}  // namespace specdet

inline void load_spec_text(Workspace& ws, const std::string& text, const std::string& file) {
    SpecParser parser(text, file);
    for (const auto& b : parser.parse_file()) {
        if (b.kind == "algebra")
            specdet::load_algebra(ws, b, file);
        else if (b.kind == "module")
            specdet::load_module(ws, b, file);
        else if (b.kind == "bimodule")
            specdet::load_bimodule(ws, b, file);
        else if (b.kind == "functional")
            specdet::load_functional(ws, b, file);
        else if (b.kind == "star")
            specdet::load_star(ws, b, file);
        else
            specdet::parse_fail(file, b.line, "unknown block kind '" + b.kind + "'");
    }
}

inline void load_spec_file(Workspace& ws, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SpecFileError(64, "cannot open workspace file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    load_spec_text(ws, buf.str(), path);
}

// ---------------------------------------------------------------------------
// Serialization.  Dense, fixed key order, two-space indent; reloading an
// emitted block yields an equal object (structural equality; positivity
// class carries through only for functions and the scalar shape).

namespace specdet {

inline std::string scalar_atom(const Scalar& s) { return print_scalar(s); }

inline void emit_element_matrix(std::ostream& os, const AMat& m, int indent) {
    std::string pad(static_cast<std::size_t>(indent), ' ');
    os << "[\n";
    for (int i = 0; i < m.rows(); ++i) {
        os << pad << "  [";
        for (int j = 0; j < m.cols(); ++j) {
            if (j) os << ", ";
            os << print_element(m.at(i, j));
        }
        os << "]" << (i + 1 < m.rows() ? "," : "") << "\n";
    }
    os << pad << "]";
}

inline void emit_int_vector(std::ostream& os, const std::vector<int>& v) {
    os << "[";
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (k) os << ", ";
        os << v[k];
    }
    os << "]";
}

}  // namespace specdet

inline void emit_algebra(std::ostream& os, const std::string& name, const AlgebraPtr& alg) {
    os << "algebra " << name << " {\n";
    if (alg->variant == RingVariant::lambda_poly) os << "  ring: lambda\n";
    os << "  dim: " << alg->dim << "\n";
    os << "  labels: [";
    for (int a = 0; a < alg->dim; ++a)
        os << (a ? ", " : "") << alg->labels[static_cast<std::size_t>(a)];
    os << "]\n";
    if (alg->class_desc == "functions") os << "  class: functions\n";
    if (alg->class_desc == "matrix" && alg->dim == 1) os << "  class: matrix\n";
    os << "  structure: [\n";
    for (int a = 0; a < alg->dim; ++a) {
        os << "    [";
        for (int b = 0; b < alg->dim; ++b) {
            if (b) os << ", ";
            os << "[";
            SVec dense(static_cast<std::size_t>(alg->dim), Scalar::zero(alg->variant));
            for (const auto& t : alg->product_of_basis(a, b))
                dense[static_cast<std::size_t>(t.idx)] = t.c;
            for (int c = 0; c < alg->dim; ++c) {
                if (c) os << ", ";
                os << specdet::scalar_atom(dense[static_cast<std::size_t>(c)]);
            }
            os << "]";
        }
        os << "]" << (a + 1 < alg->dim ? "," : "") << "\n";
    }
    os << "  ]\n";
    os << "  involution: [\n";
    for (int a = 0; a < alg->dim; ++a) {
        os << "    [";
        for (int b = 0; b < alg->dim; ++b) {
            if (b) os << ", ";
            os << specdet::scalar_atom(alg->involution.at(a, b));
        }
        os << "]" << (a + 1 < alg->dim ? "," : "") << "\n";
    }
    os << "  ]\n";
    if (alg->unit) {
        os << "  unit: [";
        for (int a = 0; a < alg->dim; ++a) {
            if (a) os << ", ";
            os << specdet::scalar_atom((*alg->unit)[static_cast<std::size_t>(a)]);
        }
        os << "]\n";
    }
    os << "}\n";
}

inline void emit_module(std::ostream& os, const std::string& name, const ModulePtr& m,
                        const std::string& algebra_ref, const Representation* action = nullptr,
                        const std::string& action_ref = "") {
    os << "module " << name << " {\n";
    os << "  over: " << algebra_ref << "\n";
    os << "  rank: " << m->rank << "\n";
    os << "  gram: ";
    specdet::emit_element_matrix(os, m->gram, 2);
    os << "\n";
    if (action) {
        os << "  representation: {\n";
        os << "    of: " << action_ref << "\n";
        os << "    images: [\n";
        for (std::size_t a = 0; a < action->images.size(); ++a) {
            os << "      ";
            specdet::emit_element_matrix(os, action->images[a], 6);
            os << (a + 1 < action->images.size() ? "," : "") << "\n";
        }
        os << "    ]\n";
        os << "  }\n";
    }
    os << "}\n";
}

inline void emit_bimodule(std::ostream& os, const std::string& name, const Bimodule& bm,
                          const std::string& left_ref, const std::string& module_ref) {
    os << "bimodule " << name << " {\n";
    os << "  left: " << left_ref << "\n";
    os << "  module: " << module_ref << "\n";
    os << "  action: [\n";
    for (std::size_t a = 0; a < bm.left_rep.images.size(); ++a) {
        os << "    ";
        specdet::emit_element_matrix(os, bm.left_rep.images[a], 4);
        os << (a + 1 < bm.left_rep.images.size() ? "," : "") << "\n";
    }
    os << "  ]\n";
    os << "  left_gram: ";
    specdet::emit_element_matrix(os, bm.left_gram, 2);
    os << "\n";
    os << "}\n";
}

inline void emit_functional(std::ostream& os, const std::string& name, const Functional& w,
                            const std::string& algebra_ref) {
    os << "functional " << name << " {\n";
    os << "  over: " << algebra_ref << "\n";
    os << "  values: [";
    const SVec& v = w.values();
    for (std::size_t a = 0; a < v.size(); ++a) {
        if (a) os << ", ";
        os << specdet::scalar_atom(v[a]);
    }
    os << "]\n";
    os << "}\n";
}

inline void emit_moments(std::ostream& os, const std::string& name, const FormalFunctional& f) {
    os << "functional " << name << " {\n";
    os << "  vars: " << f.vars << "\n";
    os << "  moments: [\n";
    std::size_t k = 0;
    for (const auto& [mono, val] : f.values) {
        os << "    [";
        specdet::emit_int_vector(os, mono);
        os << ", " << specdet::scalar_atom(val) << "]";
        os << (++k < f.values.size() ? "," : "") << "\n";
    }
    os << "  ]\n";
    os << "}\n";
}

inline void emit_star(std::ostream& os, const std::string& name, const StarProduct& s) {
    os << "star " << name << " {\n";
    os << "  vars: " << s.vars << "\n";
    os << "  order: " << s.order << "\n";
    os << "  cochains: [\n";
    for (std::size_t r = 0; r < s.cochains.size(); ++r) {
        os << "    [";
        for (std::size_t t = 0; t < s.cochains[r].size(); ++t) {
            if (t) os << ", ";
            os << "[";
            specdet::emit_int_vector(os, s.cochains[r][t].df);
            os << ", ";
            specdet::emit_int_vector(os, s.cochains[r][t].dg);
            os << ", " << specdet::scalar_atom(s.cochains[r][t].coeff) << "]";
        }
        os << "]" << (r + 1 < s.cochains.size() ? "," : "") << "\n";
    }
    os << "  ]\n";
    os << "}\n";
}

}  // namespace starmod
