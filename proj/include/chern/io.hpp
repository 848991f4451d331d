#pragma once

// Text and JSON forms: a small expression parser for series literals,
// canonical JSON for scalars, series, tables and presentations, the
// sigma-layout printer, and the term-by-term diff of a computed series
// against a reference expansion.

#include <cctype>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "chern/groups.hpp"
#include "chern/transfer.hpp"

namespace chern {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

template <class S>
class ExpressionParser {
 public:
  ExpressionParser(std::string text, const CoefficientRing& ring, TablePtr table,
                   std::optional<int> bound)
      : text_(std::move(text)), ring_(ring), table_(std::move(table)), bound_(bound) {}

  Series<S> parse() {
    Series<S> r = expr();
    skip();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return r;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ValidationError("cannot parse expression at offset " + std::to_string(pos_) + ": " + what);
  }
  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  bool starts_atom() {
    skip();
    if (pos_ >= text_.size()) return false;
    const char c = text_[pos_];
    return std::isalnum(static_cast<unsigned char>(c)) || c == '(';
  }

  Series<S> expr() {
    Series<S> acc(ring_, table_, bound_);
    acc += term();
    for (;;) {
      if (eat('+'))
        acc += term();
      else if (eat('-'))
        acc -= term();
      else
        return acc;
    }
  }

  Series<S> term() {
    if (eat('-')) return -term();
    if (eat('+')) return term();
    Series<S> acc = power();
    for (;;) {
      if (eat('*')) {
        acc = acc * power();
      } else if (eat('/')) {
        const long d = integer();
        if (d == 0) fail("division by zero");
        acc = acc * inverse(scalar_from_int<S>(d, ring_));
      } else if (starts_atom()) {
        acc = acc * power();
      } else {
        return acc;
      }
    }
  }

  Series<S> power() {
    Series<S> base = atom();
    if (eat('^')) {
      skip();
      bool neg = false;
      if (pos_ < text_.size() && text_[pos_] == '-') {
        neg = true;
        ++pos_;
      }
      const long e = integer();
      if (neg) return invert_generator(base, e);
      base = base.pow(static_cast<int>(e));
    }
    return base;
  }

  // Only a lone Laurent generator (v_s in K(s)) may carry a negative exponent.
  Series<S> invert_generator(const Series<S>& base, long e) {
    if (base.size() != 1) fail("negative exponent on a non-monomial");
    const auto& [m, c] = *base.terms().begin();
    Monomial r;
    for (std::size_t i = 0; i < table_->size(); ++i) {
      if (m[i] == 0) continue;
      if (!(*table_)[i].generator || !ring_.is_morava()) fail("negative exponent needs v_s in K(s)");
      r[i] = static_cast<Exponent>(-m[i] * e);
    }
    Series<S> out(ring_, table_, bound_);
    S ce = scalar_from_int<S>(1, ring_);
    const S ci = inverse(c);
    for (long k = 0; k < e; ++k) ce *= ci;
    out.add_term(r, ce);
    return out;
  }

  long integer() {
    skip();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_) fail("expected an integer");
    return std::stol(text_.substr(start, pos_ - start));
  }

  Series<S> atom() {
    skip();
    if (eat('(')) {
      Series<S> r = expr();
      if (!eat(')')) fail("missing ')'");
      return r;
    }
    if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      const std::size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      const mpz_class n(text_.substr(start, pos_ - start));
      Series<S> out(ring_, table_, bound_);
      if constexpr (std::is_same_v<S, Rational>)
        out.add_term(Monomial{}, Rational(n));
      else
        out.add_term(Monomial{}, ModP(mpz_class(n % ring_.p).get_si(), static_cast<std::uint32_t>(ring_.p)));
      return out;
    }
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    if (start == pos_) fail("expected a number, name or '('");
    const std::string name = text_.substr(start, pos_ - start);
    if (!table_->find(name)) fail("unknown variable '" + name + "'");
    return Series<S>::variable(ring_, table_, name, bound_);
  }

  std::string text_;
  CoefficientRing ring_;
  TablePtr table_;
  std::optional<int> bound_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parse "2*v_2*y^3*s3 + (v_1^3 + v_2) z^3 - 1/3 x" into a series over the
/// table.  Juxtaposition multiplies.
template <class S>
Series<S> parse_series(const std::string& text, const CoefficientRing& ring, const TablePtr& table,
                       std::optional<int> bound = std::nullopt) {
  return detail::ExpressionParser<S>(text, ring, table, bound).parse();
}

// ---------------------------------------------------------------------------
// JSON

inline Json scalar_json(const Rational& c, const Json& gens) {
  Json j;
  j["num"] = c.get_num().get_str();
  j["den"] = c.get_den().get_str();
  j["gens"] = gens;
  return j;
}

inline Json scalar_json(const ModP& c, const Json& gens) {
  Json j;
  j["mod_p"] = c.value();
  int e = 0;
  for (const auto& [name, v] : gens.items()) e += v.get<int>();
  j["v_exp"] = e;
  return j;
}

template <class S>
Json term_json(const VariableTable& t, const Monomial& m, const S& c) {
  Json vars = Json::object(), gens = Json::object();
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (m[i] == 0) continue;
    (t[i].generator ? gens : vars)[t[i].name] = m[i];
  }
  Json j;
  j["vars"] = vars;
  j["coeff"] = scalar_json(c, gens);
  return j;
}

/// Terms in canonical order.
template <class S>
Json series_json(const Series<S>& f) {
  Json arr = Json::array();
  for (const auto& [m, c] : canonical_terms(f)) arr.push_back(term_json(f.vars(), m, c));
  return arr;
}

/// Inverse of series_json over a given table.
template <class S>
Series<S> series_from_json(const Json& arr, const CoefficientRing& ring, const TablePtr& table,
                           std::optional<int> bound = std::nullopt) {
  if (!arr.is_array()) throw ValidationError("series JSON must be an array of terms");
  Series<S> out(ring, table, bound);
  for (const auto& term : arr) {
    Monomial m;
    for (const auto& [name, e] : term.at("vars").items()) m[table->index(name)] = e.template get<int>();
    const Json& c = term.at("coeff");
    if constexpr (std::is_same_v<S, Rational>) {
      for (const auto& [name, e] : c.at("gens").items()) m[table->index(name)] = e.template get<int>();
      Rational q(mpz_class(c.at("num").template get<std::string>()), mpz_class(c.at("den").template get<std::string>()));
      q.canonicalize();
      out.add_term(m, q);
    } else {
      const int e = c.at("v_exp").template get<int>();
      if (e) m[table->index("v_" + std::to_string(ring.height))] = static_cast<Exponent>(e);
      out.add_term(m, ModP(c.at("mod_p").template get<long>(), static_cast<std::uint32_t>(ring.p)));
    }
  }
  return out;
}

inline Json ring_json(const CoefficientRing& r) {
  Json j;
  j["kind"] = to_string(r.kind);
  j["p"] = r.p;
  if (r.is_morava())
    j["s"] = r.height;
  else
    j["N"] = r.num_generators;
  Json g = Json::object();
  for (const auto& gi : r.generators()) g[gi.name] = gi.degree;
  j["generator_degrees"] = g;
  return j;
}

inline Json table_json(const VariableTable& t) {
  Json arr = Json::array();
  for (const auto& v : t.vars()) {
    if (v.generator) continue;
    Json e;
    e["name"] = v.name;
    e["degree"] = v.degree;
    e["cap"] = v.cap ? Json(*v.cap) : Json(nullptr);
    arr.push_back(e);
  }
  return arr;
}

template <class S>
Json fgl_json(const FormalGroupLaw<S>& fgl, const std::optional<AxiomReport>& ax) {
  Json j;
  j["ring"] = ring_json(fgl.ring);
  j["provenance"] = fgl.provenance;
  j["order"] = fgl.order;
  j["fgl"] = series_json(fgl.F);
  if (ax) {
    Json a;
    a["unit"] = ax->unit;
    a["commutativity"] = ax->commutativity;
    a["associativity"] = ax->associativity;
    j["axioms"] = a;
  } else {
    j["axioms"] = nullptr;
  }
  return j;
}

struct DeltaEntry {
  int k = 0;
  int i = 0;
  Json value;
};

inline Json delta_table_json(const std::string& theory, const std::vector<DeltaEntry>& entries) {
  Json j;
  j["theory"] = theory;
  Json arr = Json::array();
  for (const auto& e : entries) {
    Json x;
    x["k"] = e.k;
    x["i"] = e.i;
    x["value"] = e.value;
    arr.push_back(x);
  }
  j["entries"] = arr;
  return j;
}

inline std::vector<DeltaEntry> lambda_entries(const LambdaRow& row) {
  std::vector<DeltaEntry> out;
  for (std::size_t i = 0; i < row.lambda.size(); ++i)
    if (!row.lambda[i].is_zero()) out.push_back({row.k, static_cast<int>(i), series_json(row.lambda[i])});
  return out;
}

template <class S>
Json transfer_json(const TransferExpression<S>& e) {
  Json j;
  j["basis"] = e.basis;
  j["label"] = e.label;
  j["text"] = to_string(e.value);
  j["value"] = series_json(e.value);
  if (!e.omega_coeffs.empty()) {
    Json w = Json::array();
    for (std::size_t k = 1; k < e.omega_coeffs.size(); ++k) w.push_back(to_string(e.omega_coeffs[k]));
    j["omega_coeffs"] = w;
  }
  j["euler_coeff"] = e.euler_coeff ? Json(to_string(*e.euler_coeff)) : Json(nullptr);
  return j;
}

inline Json presentation_json(const RingPresentation& r) {
  Json j;
  j["theory"] = r.theory;
  Json g = Json::array();
  for (const auto& gi : r.generators) g.push_back(Json{{"name", gi.name}, {"degree", gi.degree}});
  j["generators"] = g;
  j["relations"] = r.relations;
  Json d = Json::object();
  for (const auto& [k, v] : r.data) d[k] = v;
  j["data"] = d;
  j["unknowns"] = r.unknowns;
  j["rank"] = r.rank ? Json(r.rank->get_str()) : Json(nullptr);
  j["basis"] = r.basis ? Json(*r.basis) : Json(nullptr);
  return j;
}

// ---------------------------------------------------------------------------
// Layout printer

/// "sigma_k = ..." with sigma_p powers descending, then the x-term, then the
/// constant; coefficient, v_s, y, sigma_p and x in that order within a term.
inline std::string sigma_layout(const SigmaFormula& f) {
  const auto& t = f.value.vars();
  const std::size_t si = t.index("s" + std::to_string(f.p)), xi = t.index("x"), yi = t.index("y");
  const std::string vs = "v_" + std::to_string(f.s);
  std::vector<std::pair<Monomial, ModP>> terms(f.value.terms().begin(), f.value.terms().end());
  std::stable_sort(terms.begin(), terms.end(), [&](const auto& a, const auto& b) {
    if (a.first[si] != b.first[si]) return a.first[si] > b.first[si];
    if (a.first[xi] != b.first[xi]) return a.first[xi] > b.first[xi];
    return a.first[yi] < b.first[yi];
  });
  auto factor = [](const std::string& name, int e) {
    return e == 1 ? name : name + "^" + std::to_string(e);
  };
  std::ostringstream os;
  os << "sigma_" << f.k << " = ";
  if (terms.empty()) os << "0";
  for (std::size_t n = 0; n < terms.size(); ++n) {
    const auto& [m, c] = terms[n];
    std::vector<std::string> parts;
    if (c.value() != 1) parts.push_back(std::to_string(c.value()));
    const int ve = m[t.index(vs)];
    if (ve) parts.push_back(factor(vs, ve));
    if (m[xi]) parts.push_back(factor("x", m[xi]));
    if (m[yi]) parts.push_back(factor("y", m[yi]));
    if (m[si]) parts.push_back(factor("sigma_" + std::to_string(f.p), m[si]));
    if (parts.empty()) parts.push_back("1");
    if (n) os << " + ";
    for (std::size_t q = 0; q < parts.size(); ++q) os << (q ? " " : "") << parts[q];
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Reference diff for the BP delta_1

struct DiffRow {
  std::string monomial;       // e.g. "v_1^2*z^2"
  int degree = 0;             // topological degree of the monomial
  std::string reference;      // coefficient in the reference, "0" if absent
  std::string computed;       // coefficient in the computed series
  std::string shifted;        // coefficient in z * computed series
  bool matches_computed = false;
  bool matches_shifted = false;
};

struct DiffReport {
  std::string reference_text;
  int z_order = 0;
  int expected_degree = 0;  // degree of the computed delta_j
  std::vector<DiffRow> rows;
  bool reference_homogeneous = false;
  std::optional<int> reference_degree;
  bool equal_to_computed = false;     // in the quotient by [2](z), z^{z_order}
  bool equal_to_shifted = false;      // reference = z * computed there
  std::vector<std::string> nonhomogeneous_reference_terms;
};

/// Compare a computed delta_j (in BP^*[[z]]/([2](z)) mod z^{z_order})
/// against a reference expansion term by term, both as given and after
/// shifting the computed series by z (the reference may be listing
/// z * delta_j).  Equality is also decided in the quotient.
inline DiffReport diff_against_reference(const BPDelta& bd, int j, const std::string& reference) {
  if (j < 1 || j >= static_cast<int>(bd.delta.size()))
    throw ValidationError("delta index out of range for the diff");
  const auto& ring = bd.ring;
  const TablePtr& t = bd.z_table;
  const std::size_t zi = t->index("z");
  DiffReport r;
  r.reference_text = reference;
  r.z_order = bd.dseries.z_order;
  r.expected_degree = 2 - 4 * j;

  const Series<Rational> ref = parse_series<Rational>(reference, ring, t);
  const Series<Rational>& comp = bd.delta[static_cast<std::size_t>(j)];
  const Series<Rational> shifted = Series<Rational>::variable(ring, t, "z") * comp;

  std::map<Monomial, int> order;
  std::vector<Monomial> monos;
  auto note = [&](const Series<Rational>& f) {
    for (const auto& [m, c] : canonical_terms(f))
      if (order.emplace(m, 0).second) monos.push_back(m);
  };
  note(ref);
  note(comp);
  note(shifted);
  std::sort(monos.begin(), monos.end(),
            [&](const Monomial& a, const Monomial& b) { return canonical_less(*t, a, b); });
  for (const auto& m : monos) {
    DiffRow row;
    row.monomial = monomial_to_string(*t, m);
    row.degree = t->degree(m);
    row.reference = ref.coefficient(m).get_str();
    row.computed = comp.coefficient(m).get_str();
    row.shifted = shifted.coefficient(m).get_str();
    row.matches_computed = ref.coefficient(m) == comp.coefficient(m);
    row.matches_shifted = ref.coefficient(m) == shifted.coefficient(m);
    r.rows.push_back(row);
  }
  r.reference_degree = ref.homogeneous_degree();
  r.reference_homogeneous = r.reference_degree.has_value();
  // The majority degree among reference terms; terms off it are flagged.
  std::map<int, int> tally;
  for (const auto& [m, c] : ref.terms()) ++tally[t->degree(m)];
  int common = 0, best = -1;
  for (const auto& [d, n] : tally)
    if (n > best) {
      best = n;
      common = d;
    }
  for (const auto& [m, c] : canonical_terms(ref))
    if (t->degree(m) != common) r.nonhomogeneous_reference_terms.push_back(monomial_to_string(*t, m));

  // Equality in BP^*[[z]]/([2](z)) modulo z^{z_order}.
  const Series<Rational>& two = bd.dseries.two_series;
  Series<Rational> two_z(ring, t);
  for (const auto& [m, c] : two.terms()) {
    Monomial mz;
    for (std::size_t i = 0; i < two.vars().size(); ++i) {
      if (m[i] == 0) continue;
      const auto& name = two.vars()[i].name;
      mz[name == "c" ? zi : t->index(name)] = m[i];
    }
    two_z.add_term(mz, c);
  }
  const QuotientSpec q = QuotientSpec::series_relation("z", two_z);
  r.equal_to_computed = reduce(ref - comp, q).is_zero();
  r.equal_to_shifted = reduce(ref - shifted, q).is_zero();
  return r;
}

inline std::string row_status(const DiffRow& row) {
  if (row.reference == "0" && row.shifted == "0") return "-";
  if (row.matches_shifted) return "agree";
  if (row.reference == "0") return "computed-only";
  if (row.shifted == "0") return "reference-only";
  return "differ";
}

inline Json diff_json(const DiffReport& r) {
  Json j;
  j["reference"] = r.reference_text;
  j["z_order"] = r.z_order;
  j["expected_degree"] = r.expected_degree;
  j["reference_homogeneous"] = r.reference_homogeneous;
  j["nonhomogeneous_reference_terms"] = r.nonhomogeneous_reference_terms;
  j["equal_to_computed"] = r.equal_to_computed;
  j["equal_to_z_times_computed"] = r.equal_to_shifted;
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    Json x;
    x["monomial"] = row.monomial;
    x["degree"] = row.degree;
    x["reference"] = row.reference;
    x["computed"] = row.computed;
    x["z_times_computed"] = row.shifted;
    x["status"] = row_status(row);
    rows.push_back(x);
  }
  j["rows"] = rows;
  return j;
}

inline std::string diff_text(const DiffReport& r) {
  std::ostringstream os;
  os << "reference: " << r.reference_text << "\n";
  os << "compared modulo z^" << r.z_order << " against delta (degree " << r.expected_degree
     << ") and z*delta (degree " << r.expected_degree + 2 << ")\n";
  os << "monomial                 deg  reference  delta  z*delta  status\n";
  for (const auto& row : r.rows) {
    std::string mono = row.monomial;
    mono.resize(std::max<std::size_t>(mono.size(), 24), ' ');
    os << mono << " " << row.degree << "\t" << row.reference << "\t" << row.computed << "\t"
       << row.shifted << "\t" << row_status(row) << "\n";
  }
  os << "reference homogeneous: " << (r.reference_homogeneous ? "yes" : "no");
  if (!r.nonhomogeneous_reference_terms.empty()) {
    os << " (off-degree terms:";
    for (const auto& s : r.nonhomogeneous_reference_terms) os << " " << s;
    os << ")";
  }
  os << "\nequal in the quotient: delta " << (r.equal_to_computed ? "yes" : "no") << ", z*delta "
     << (r.equal_to_shifted ? "yes" : "no") << "\n";
  return os.str();
}

}  // namespace chern
