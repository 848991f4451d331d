#pragma once

// The chern-transfer command line: one subcommand per pipeline, text / JSON
// / sigma-layout output, exit codes 0 (ok), 2 (bad input), 3 (a consistency
// check failed).  JSON output is {"header": ..., "payload": ...} with no
// timestamps, so identical jobs give identical bytes.

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "chern/groups.hpp"
#include "chern/io.hpp"
#include "chern/transfer.hpp"

namespace chern::cli {

inline constexpr const char* kToolName = "chern-transfer";
inline constexpr const char* kToolVersion = "1.0.0";

/// Published expansion of delta_1 modulo z^8 used as the default diff
/// reference for delta-bp2.
inline constexpr const char* kReferenceDelta1 =
    "v_1^2 z^2 + (v_1^3 + v_2)z^3 + v_1 z^4 + (v_1^6 + v_1^3 v_2)z^6 + (v_1^4 v_2 + v_2^2 + v_3) z^7";

struct JobConfig {
  std::string command;
  std::string theory = "morava";  // morava | bp
  std::string family;             // euler / present
  std::string what = "omega";     // transfer
  std::string job = "fgl";        // compare-oracle
  int p = 2, s = 1, n = 1, q = 2, k = 0, N = 0;
  int order = 0, x_order = 0, z_order = 8, c2_order = 4;
  std::vector<int> qs;
  std::string poly;
  std::string reference = kReferenceDelta1;
  bool diff = true;
  bool check_axioms = false;
  std::string format = "text";
  std::string output;
  std::string oracle_cmd;
};

inline Json job_json(const JobConfig& c) {
  Json j;
  j["command"] = c.command;
  j["theory"] = c.theory;
  j["family"] = c.family;
  j["what"] = c.what;
  j["job"] = c.job;
  j["p"] = c.p;
  j["s"] = c.s;
  j["n"] = c.n;
  j["q"] = c.q;
  j["k"] = c.k;
  j["N"] = c.N;
  j["order"] = c.order;
  j["x_order"] = c.x_order;
  j["z_order"] = c.z_order;
  j["c2_order"] = c.c2_order;
  j["qs"] = c.qs;
  j["poly"] = c.poly;
  j["format"] = c.format;
  return j;
}

/// What a command produced, in each output format.
struct Emitted {
  Json payload;
  std::string text;
  std::string layout;  // sigma layout where one exists, else empty
  int exit_code = 0;
};

// ---------------------------------------------------------------------------
// Formal group law cache, content-addressed by (theory, p, s or N, order)

inline std::optional<std::filesystem::path> cache_dir() {
  const char* d = std::getenv("FGL_CACHE_DIR");
  if (!d || !*d) return std::nullopt;
  return std::filesystem::path(d);
}

inline std::string cache_key(const std::string& theory, int p, int sn, int order) {
  return theory + "-p" + std::to_string(p) + "-" + (theory == "bp" ? "N" : "s") + std::to_string(sn) +
         "-o" + std::to_string(order) + ".json";
}

template <class S>
std::optional<Series<S>> cache_load(const std::string& key, const CoefficientRing& ring,
                                    const TablePtr& table, int order) {
  const auto dir = cache_dir();
  if (!dir) return std::nullopt;
  std::ifstream in(*dir / key);
  if (!in) return std::nullopt;
  try {
    const Json j = Json::parse(in);
    if (j.at("key").get<std::string>() != key) return std::nullopt;
    return series_from_json<S>(j.at("terms"), ring, table, order);
  } catch (const std::exception&) {
    return std::nullopt;  // unreadable entries are recomputed
  }
}

template <class S>
void cache_store(const std::string& key, const Series<S>& f) {
  const auto dir = cache_dir();
  if (!dir) return;
  std::error_code ec;
  std::filesystem::create_directories(*dir, ec);
  const auto tmp = *dir / (key + ".tmp" + std::to_string(::getpid()));
  {
    std::ofstream out(tmp);
    if (!out) return;
    Json j;
    j["key"] = key;
    j["terms"] = series_json(f);
    out << j.dump() << "\n";
  }
  std::filesystem::rename(tmp, *dir / key, ec);
}

inline std::shared_ptr<const FormalGroupLaw<ModP>> cached_morava(int p, int s, int order) {
  const std::string key = cache_key("morava", p, s, order);
  const CoefficientRing ring = make_ring(RingKind::MoravaK, p, s);
  const TablePtr t = fgl_table(ring);
  if (auto f = cache_load<ModP>(key, ring, t, order))
    return std::make_shared<const FormalGroupLaw<ModP>>(
        FormalGroupLaw<ModP>{ring, t, std::move(*f), order, "honda-mod-p"});
  auto law = std::make_shared<const FormalGroupLaw<ModP>>(morava_fgl(p, s, order));
  cache_store(key, law->F);
  return law;
}

inline std::shared_ptr<const FormalGroupLaw<Rational>> cached_bp(int p, int N, int order) {
  const std::string key = cache_key("bp", p, N, order);
  const CoefficientRing ring = make_ring(RingKind::BPInteger, p, N);
  const TablePtr t = fgl_table(ring);
  if (auto f = cache_load<Rational>(key, ring, t, order))
    return std::make_shared<const FormalGroupLaw<Rational>>(
        FormalGroupLaw<Rational>{ring, t, std::move(*f), order, "bp-log"});
  auto law = std::make_shared<const FormalGroupLaw<Rational>>(bp_fgl(p, N, order));
  cache_store(key, law->F);
  return law;
}

/// Number of generators that can reach total degree `order`.
inline int full_generator_count(int p, int order) {
  int N = 1;
  while (ipow(p, N + 1) <= order) ++N;
  return N;
}

// ---------------------------------------------------------------------------
// Commands

inline void require_morava_params(const JobConfig& c) {
  if (!is_prime(c.p)) throw ValidationError("p must be prime");
  if (c.s < 1) throw ValidationError("s must be >= 1");
}

template <class S>
Emitted emit_law(const FormalGroupLaw<S>& law, bool axioms) {
  Emitted e;
  std::optional<AxiomReport> ax;
  if (axioms) ax = fgl_axiom_check(law);
  e.payload = fgl_json(law, ax);
  std::ostringstream os;
  os << "F(x,y) = " << to_string(law.F) << "\n";
  if (ax)
    os << "unit " << (ax->unit ? "ok" : "FAIL") << ", commutativity " << (ax->commutativity ? "ok" : "FAIL")
       << ", associativity " << (ax->associativity ? "ok" : "FAIL") << "\n";
  e.text = os.str();
  if (ax && !ax->all()) e.exit_code = 3;
  return e;
}

inline Emitted cmd_fgl(const JobConfig& c) {
  if (c.theory == "bp") {
    const int order = c.order ? c.order : (c.p == 2 ? 32 : 16);
    const int N = c.N ? c.N : full_generator_count(c.p, order);
    return emit_law(*cached_bp(c.p, N, order), c.check_axioms);
  }
  require_morava_params(c);
  const int order = c.order ? c.order : static_cast<int>(ipow(c.p, c.s + 1));
  return emit_law(*cached_morava(c.p, c.s, order), c.check_axioms);
}

template <class S>
Emitted emit_pseries(const FormalGroupLaw<S>& law, int q, int order) {
  if (q < 1) throw ValidationError("q must be >= 1");
  const TablePtr t = univariate_table(law.ring, "z");
  const Series<S> qz = q_series(law, q, t, order);
  Emitted e;
  e.payload["q"] = q;
  e.payload["order"] = order;
  e.payload["ring"] = ring_json(law.ring);
  e.payload["series"] = series_json(qz);
  e.text = "[" + std::to_string(q) + "](z) = " + to_string(qz) + "\n";
  return e;
}

inline Emitted cmd_pseries(const JobConfig& c) {
  if (c.theory == "bp") {
    const int order = c.order ? c.order : 16;
    const int N = c.N ? c.N : full_generator_count(c.p, order);
    return emit_pseries(*cached_bp(c.p, N, order), c.q, order);
  }
  require_morava_params(c);
  const int order = c.order ? c.order : static_cast<int>(ipow(c.p, c.s + 1));
  return emit_pseries(*cached_morava(c.p, c.s, order), c.q, order);
}

inline SigmaExpansion make_expansion(const JobConfig& c) {
  require_morava_params(c);
  const long min_x = ipow(c.p, c.s + 1);
  if (c.x_order && c.x_order < min_x)
    throw ValidationError("x-order " + std::to_string(c.x_order) + " is infeasible; minimal is " +
                          std::to_string(min_x));
  const int x = c.x_order ? c.x_order : static_cast<int>(min_x);
  return SigmaExpansion(c.p, c.s, x, cached_morava(c.p, c.s, x + static_cast<int>(ipow(c.p, c.s)) - 1));
}

inline std::vector<int> k_range(const JobConfig& c, int hi) {
  if (c.k == 0) {
    std::vector<int> all;
    for (int k = 1; k <= hi; ++k) all.push_back(k);
    return all;
  }
  if (c.k < 1 || c.k > hi)
    throw ValidationError("k must lie in 1.." + std::to_string(hi));
  return {c.k};
}

inline Emitted cmd_sigma_expand(const JobConfig& c) {
  const SigmaExpansion e = make_expansion(c);
  Emitted out;
  out.payload["p"] = c.p;
  out.payload["s"] = c.s;
  out.payload["x_order"] = e.x_order();
  Json rows = Json::array();
  std::ostringstream text, layout;
  for (int k : k_range(c, c.p)) {
    rows.push_back(Json{{"k", k}, {"series", series_json(e.sigma(k))}});
    text << "sigma_" << k << " = " << to_string(e.sigma(k)) << "\n";
    if (k < c.p) layout << sigma_layout(sigma_formula(morava_lambda(e, k), e)) << "\n";
  }
  out.payload["expansions"] = rows;
  out.text = text.str();
  out.layout = layout.str();
  return out;
}

inline Emitted cmd_lambda(const JobConfig& c) {
  const SigmaExpansion e = make_expansion(c);
  const std::string theory = "K(" + std::to_string(c.s) + ") p=" + std::to_string(c.p);
  std::vector<DeltaEntry> entries;
  Json residuals = Json::object();
  std::ostringstream text, layout;
  for (int k : k_range(c, c.p - 1)) {
    const LambdaRow row = morava_lambda(e, k);
    for (auto& en : lambda_entries(row)) entries.push_back(std::move(en));
    residuals[std::to_string(k)] = row.residual_zero;
    for (std::size_t i = 0; i < row.lambda.size(); ++i)
      if (!row.lambda[i].is_zero())
        text << "lambda_" << i << "^(" << k << ") = " << to_string(row.lambda[i]) << "\n";
    layout << sigma_layout(sigma_formula(row, e)) << "\n";
  }
  Emitted out;
  out.payload = delta_table_json(theory, entries);
  out.payload["residual_zero"] = residuals;
  out.text = text.str().empty() ? "all lambda vanish\n" : text.str();
  out.layout = layout.str();
  return out;
}

inline Emitted cmd_delta_bp2(const JobConfig& c) {
  if (c.z_order < 2) throw ValidationError("z-order must be >= 2");
  if (c.c2_order < 1) throw ValidationError("c2-order must be >= 1");
  const int N = bp_generators_needed(c.z_order, c.c2_order);
  const int order = bp_fgl_order_needed(c.z_order, c.c2_order);
  if (order > 64)
    throw ValidationError("z-order/c2-order need a BP law of order " + std::to_string(order) +
                          "; at most 64 is supported");
  const BPDelta bd = bp_delta_p2_with(*cached_bp(2, N, order), c.z_order, c.c2_order);
  std::vector<DeltaEntry> entries;
  std::ostringstream text;
  for (std::size_t j = 0; j < bd.delta.size(); ++j) {
    entries.push_back({1, static_cast<int>(j), series_json(bd.delta[j])});
    text << "delta_" << j << " = " << to_string(bd.delta[j]) << "\n";
  }
  Emitted out;
  out.payload = delta_table_json("BP p=2", entries);
  Json checks;
  checks["base_case"] = bd.base_case;
  checks["residual_zero"] = bd.residual_zero;
  checks["annihilation"] = bd.annihilation;
  checks["homogeneous"] = bd.homogeneous;
  checks["rho_consistent"] = bd.rho_consistent;
  out.payload["checks"] = checks;
  out.payload["z_order"] = c.z_order;
  out.payload["c2_order"] = c.c2_order;
  text << "checks: base " << bd.base_case << ", residual " << bd.residual_zero << ", annihilation "
       << bd.annihilation << ", homogeneous " << bd.homogeneous << ", rho " << bd.rho_consistent << "\n";
  if (c.diff && c.c2_order >= 1) {
    const DiffReport r = diff_against_reference(bd, 1, c.reference);
    out.payload["diff"] = diff_json(r);
    text << "\n" << diff_text(r);
  }
  out.text = text.str();
  return out;
}

template <class S>
Emitted emit_transfer(const TransferExpression<S>& t) {
  Emitted e;
  e.payload = transfer_json(t);
  e.text = t.label + " = " + to_string(t.value) + "\n";
  return e;
}

inline Emitted cmd_transfer(const JobConfig& c) {
  if (c.theory == "bp") {
    if (c.p != 2) throw ValidationError("the BP transfer is implemented for p = 2");
    const auto th = bp2_theory(bp_delta_p2(c.z_order, c.c2_order));
    if (c.what == "omega" || c.what == "c1")
      return emit_transfer(TransferExpression<Rational>{"pi-cover", "Tr*(x)", th.tr_omega[1], {}, std::nullopt});
    if (c.what == "one")
      return emit_transfer(TransferExpression<Rational>{"pi-cover", "Tr*(1)", th.tr_one, {}, std::nullopt});
    if (c.what == "x-power") return emit_transfer(transfer_x_power_p2(c.k ? c.k : 1, th));
    if (c.what == "norm") {
      const TablePtr xt = symmetric_table(th.ring, 2);
      return emit_transfer(transfer_of_norm_symmetric(parse_series<Rational>(c.poly, th.ring, xt), th,
                                                      "Tr*(" + c.poly + ")"));
    }
    throw ValidationError("unknown BP transfer '" + c.what + "'");
  }
  const SigmaExpansion e = make_expansion(c);
  if (c.what == "c1") return emit_transfer(transfer_c1(c.p, c.s));
  if (c.what == "omega" || c.what == "sigma") {
    const int k = c.k ? c.k : 1;
    if (k < 1 || k > c.p - 1) throw ValidationError("k must lie in 1.." + std::to_string(c.p - 1));
    const LambdaRow row = morava_lambda(e, k);
    return emit_transfer(c.what == "omega" ? morava_transfer_omega(row, e.ring())
                                           : morava_transfer_sigma(row, e.ring()));
  }
  const auto th = morava_theory(e);
  if (c.what == "one")
    return emit_transfer(TransferExpression<ModP>{"pi-cover", "Tr*(1)", th.tr_one, {}, std::nullopt});
  if (c.what == "x-power") return emit_transfer(transfer_x_power_p2(c.k ? c.k : 1, th));
  if (c.what == "norm") {
    const TablePtr xt = symmetric_table(th.ring, c.p);
    return emit_transfer(
        transfer_of_norm_symmetric(parse_series<ModP>(c.poly, th.ring, xt), th, "Tr*(" + c.poly + ")"));
  }
  throw ValidationError("unknown transfer '" + c.what + "'");
}

/// Default z-order for [q](z)/z in K(s): [q](z) = unit * z^{p^{s v_p(q)}}.
inline int morava_euler_order(int p, int s, int q) {
  int v = 0;
  while (q % p == 0) {
    q /= p;
    ++v;
  }
  return v == 0 ? 0 : static_cast<int>(ipow(p, s * v)) - 1;
}

template <class S>
Emitted emit_series(const std::string& label, const Series<S>& f) {
  Emitted e;
  e.payload["label"] = label;
  e.payload["series"] = series_json(f);
  e.text = to_string(f) + "\n";
  return e;
}

inline Emitted cmd_euler(const JobConfig& c) {
  const std::string& f = c.family;
  if (f == "cyclic" || f == "product") {
    std::vector<int> qs = f == "cyclic" ? std::vector<int>{c.q} : c.qs;
    if (qs.empty()) throw ValidationError("product needs --qs");
    for (int q : qs)
      if (q < 1) throw ValidationError("q must be >= 1");
    if (c.theory == "bp") {
      const int order = c.order ? c.order : 8;
      const int N = c.N ? c.N : full_generator_count(c.p, order + 1);
      const auto law = cached_bp(c.p, N, order + 1);
      return f == "cyclic" ? emit_series("[q](z)/z", quillen_euler(*law, qs[0], order))
                           : emit_series("prod [q_i](z_i)/z_i", product_euler(*law, qs, order));
    }
    require_morava_params(c);
    int order = c.order;
    if (!order)
      for (int q : qs) order = std::max(order, morava_euler_order(c.p, c.s, q));
    const auto law = cached_morava(c.p, c.s, std::max<int>(order + 1, static_cast<int>(ipow(c.p, c.s))));
    return f == "cyclic" ? emit_series("[q](z)/z", quillen_euler(*law, qs[0], order))
                         : emit_series("prod [q_i](z_i)/z_i", product_euler(*law, qs, order));
  }
  require_morava_params(c);
  if (f == "sigma-p") return emit_series("Tr*(1) Sigma_p", sigma_p_euler(c.p, c.s));
  if (f == "wreath") return emit_transfer(wreath_euler(c.p, c.n, c.s));
  if (f == "semidirect") return emit_transfer(semidirect_euler(c.p, c.n, c.s));
  throw ValidationError("unknown group family '" + f + "' (cyclic, product, sigma-p, wreath, semidirect)");
}

inline Emitted emit_presentation(const RingPresentation& r) {
  Emitted e;
  e.payload = presentation_json(r);
  std::ostringstream os;
  os << r.theory << "\n  generators:";
  for (const auto& g : r.generators) os << " " << g.name << " (deg " << g.degree << ")";
  os << "\n  relations:";
  for (const auto& rel : r.relations) os << " " << rel << " = 0;";
  for (const auto& [k, v] : r.data) os << "\n  " << k << " = " << v;
  for (const auto& u : r.unknowns) os << "\n  unknown: " << u;
  if (r.rank) os << "\n  rank: " << r.rank->get_str();
  os << "\n";
  e.text = os.str();
  return e;
}

inline Emitted cmd_present(const JobConfig& c) {
  require_morava_params(c);
  if (c.family == "sigma-p" || c.family.empty()) {
    RingPresentation r = sigma_p_presentation(c.p, c.s);
    if (ipow(c.p, c.s) <= 64) {
      const auto chk = bp_sigma_p_relation_check(c.p, c.s);
      r.data["(p-1)! [p](z)/z in K(s)"] = to_string(chk.pi_side);
      r.data["rho*(Tr*(1))"] = to_string(chk.sigma_side);
      r.data["bp relation check"] = chk.matches && chk.well_formed ? "ok" : "FAIL";
      Emitted e = emit_presentation(r);
      if (!(chk.matches && chk.well_formed)) e.exit_code = 3;
      return e;
    }
    return emit_presentation(r);
  }
  if (c.family == "wreath") return emit_presentation(wreath_presentation(c.p, c.s, c.n));
  throw ValidationError("unknown presentation '" + c.family + "' (sigma-p, wreath)");
}

inline Emitted cmd_basis(const JobConfig& c) {
  require_morava_params(c);
  const WreathBasis b = wreath_basis(c.p, c.s, c.n);
  Emitted e;
  e.payload["p"] = c.p;
  e.payload["s"] = c.s;
  e.payload["n"] = c.n;
  e.payload["formula_rank"] = b.formula_rank.get_str();
  e.payload["enumerated_rank"] = b.enumerated_rank ? Json(*b.enumerated_rank) : Json(nullptr);
  e.payload["diagonal_count"] = b.diagonal_count;
  e.payload["orbit_classes"] = b.orbit_classes;
  std::ostringstream os;
  os << "rank " << b.formula_rank.get_str();
  if (b.enumerated_rank) os << " (enumerated " << *b.enumerated_rank << ")";
  os << "\n";
  e.text = os.str();
  if (b.enumerated_rank && mpz_class(*b.enumerated_rank) != b.formula_rank) e.exit_code = 3;
  return e;
}

// ---------------------------------------------------------------------------
// Differential testing against an external oracle

/// Run `cmd` with `input` on stdin; returns (exit status, stdout).
inline std::pair<int, std::string> run_subprocess(const std::string& cmd, const std::string& input) {
  char path[] = "/tmp/chern-oracle-XXXXXX";
  const int fd = ::mkstemp(path);
  if (fd < 0) throw ConsistencyError("cannot create a temporary file for the oracle job");
  {
    std::ofstream f(path);
    f << input;
  }
  ::close(fd);
  const std::string full = cmd + " < '" + path + "'";
  FILE* pipe = ::popen(full.c_str(), "r");
  if (!pipe) {
    std::remove(path);
    throw ConsistencyError("cannot start oracle: " + cmd);
  }
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  const int status = ::pclose(pipe);
  std::remove(path);
  return {status, out};
}

/// The quantities the oracle is asked to reproduce, with the primary's
/// canonical JSON attached.
inline Json oracle_quantities(const JobConfig& c) {
  Json qs = Json::array();
  auto add = [&](const std::string& name, Json params, Json primary) {
    qs.push_back(Json{{"name", name}, {"params", std::move(params)}, {"primary", std::move(primary)}});
  };
  if (c.job == "fgl") {
    JobConfig d = c;
    add("fgl", job_json(c), cmd_fgl(d).payload.at("fgl"));
  } else if (c.job == "pseries") {
    add("pseries", job_json(c), cmd_pseries(c).payload.at("series"));
  } else if (c.job == "sigma-expand") {
    const SigmaExpansion e = make_expansion(c);
    for (int k : k_range(c, c.p))
      add("sigma_" + std::to_string(k), Json{{"p", c.p}, {"s", c.s}, {"k", k}, {"x_order", e.x_order()}},
          series_json(e.sigma(k)));
  } else if (c.job == "norm-enum") {
    for (int k = 1; k < c.p; ++k) {
      const OrbitBasis b = omega(c.p, k);
      add("omega_" + std::to_string(k), Json{{"p", c.p}, {"k", k}}, b.representatives);
    }
  } else {
    throw ValidationError("unknown oracle job '" + c.job + "' (fgl, pseries, sigma-expand, norm-enum)");
  }
  return qs;
}

inline Emitted cmd_compare_oracle(const JobConfig& c) {
  if (c.oracle_cmd.empty()) throw ValidationError("--oracle-cmd is required");
  Json job = job_json(c);
  job["job_id"] = c.job + "-p" + std::to_string(c.p) + "-s" + std::to_string(c.s);
  job["quantities"] = oracle_quantities(c);
  const auto [status, out] = run_subprocess(c.oracle_cmd, job.dump());
  if (status != 0)
    throw ConsistencyError("oracle exited with status " +
                           std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : status));
  Json report;
  try {
    report = Json::parse(out);
  } catch (const std::exception& ex) {
    throw ConsistencyError(std::string("oracle report is not JSON: ") + ex.what());
  }
  if (!report.contains("verdicts") || !report["verdicts"].is_object())
    throw ConsistencyError("oracle report has no verdicts object");

  Emitted e;
  Json summary = Json::array();
  std::ostringstream os;
  int mismatches = 0, missing = 0;
  for (const auto& q : job["quantities"]) {
    const std::string name = q["name"].get<std::string>();
    std::string verdict = "missing";
    Json diff = nullptr;
    if (report["verdicts"].contains(name)) {
      const Json& v = report["verdicts"][name];
      verdict = v.is_string() ? v.get<std::string>() : v.value("verdict", std::string("missing"));
      if (v.is_object() && v.contains("diff")) diff = v["diff"];
    }
    if (verdict != "match" && verdict != "mismatch" && verdict != "skipped") verdict = "missing";
    if (verdict == "mismatch") ++mismatches;
    if (verdict == "missing") ++missing;
    summary.push_back(Json{{"name", name}, {"verdict", verdict}, {"diff", diff}});
    os << name << ": " << verdict << "\n";
  }
  e.payload["job_id"] = job["job_id"];
  e.payload["oracle_job_id"] = report.value("job_id", std::string());
  e.payload["verdicts"] = summary;
  e.payload["truncation"] = report.value("truncation", Json(nullptr));
  e.text = os.str();
  if (mismatches || missing) e.exit_code = 3;
  return e;
}

// ---------------------------------------------------------------------------
// Entry point

inline Emitted dispatch(const JobConfig& c) {
  if (c.command == "fgl") return cmd_fgl(c);
  if (c.command == "pseries") return cmd_pseries(c);
  if (c.command == "sigma-expand") return cmd_sigma_expand(c);
  if (c.command == "lambda") return cmd_lambda(c);
  if (c.command == "delta-bp2") return cmd_delta_bp2(c);
  if (c.command == "transfer") return cmd_transfer(c);
  if (c.command == "euler") return cmd_euler(c);
  if (c.command == "present") return cmd_present(c);
  if (c.command == "basis") return cmd_basis(c);
  if (c.command == "compare-oracle") return cmd_compare_oracle(c);
  throw ValidationError("unknown command '" + c.command + "'");
}

inline std::string render(const JobConfig& c, const Emitted& e) {
  if (c.format == "json") {
    Json doc;
    doc["header"] = Json{{"tool", kToolName}, {"version", kToolVersion}, {"job", job_json(c)}};
    doc["payload"] = e.payload;
    return doc.dump(2) + "\n";
  }
  if (c.format == "paper-layout" && !e.layout.empty()) return e.layout;
  return e.text;
}

inline void add_common(CLI::App* sub, JobConfig& c) {
  sub->add_option("-p,--prime", c.p, "prime p")->capture_default_str();
  sub->add_option("-s,--height", c.s, "Morava height s")->capture_default_str();
  sub->add_option("--format", c.format, "text | json | paper-layout")
      ->check(CLI::IsMember({"text", "json", "paper-layout"}))
      ->capture_default_str();
  sub->add_option("-o,--output", c.output, "write the result to this file");
}

/// Parse argv, run, print; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  JobConfig c;
  CLI::App app{"Formal group laws, transferred Chern classes and stable Euler classes", kToolName};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  auto* fgl = app.add_subcommand("fgl", "formal group law F(x,y)");
  add_common(fgl, c);
  fgl->add_option("--theory", c.theory, "morava | bp")->check(CLI::IsMember({"morava", "bp"}));
  fgl->add_option("-N,--generators", c.N, "BP generators v_1..v_N (default: all that fit)");
  fgl->add_option("--order", c.order, "total degree bound");
  fgl->add_flag("--check-axioms", c.check_axioms, "verify unit, commutativity, associativity");

  auto* ps = app.add_subcommand("pseries", "q-series [q](z)");
  add_common(ps, c);
  ps->add_option("--theory", c.theory, "morava | bp")->check(CLI::IsMember({"morava", "bp"}));
  ps->add_option("-N,--generators", c.N, "BP generators");
  ps->add_option("-q", c.q, "q")->capture_default_str();
  ps->add_option("--order", c.order, "z-degree bound");

  auto* se = app.add_subcommand("sigma-expand", "sigma_k(x, F(x,z), ..., F(x,[p-1]z)) in K(s)");
  add_common(se, c);
  se->add_option("-k", c.k, "k in 1..p (0: all)");
  se->add_option("--x-order", c.x_order, "x-degree bound (default p^(s+1))");

  auto* la = app.add_subcommand("lambda", "Morava coefficients lambda_i^(k)");
  add_common(la, c);
  la->add_option("-k", c.k, "k in 1..p-1 (0: all)");
  la->add_option("--x-order", c.x_order, "x-degree bound (default p^(s+1))");

  auto* db = app.add_subcommand("delta-bp2", "BP coefficients delta_j at p = 2");
  add_common(db, c);
  db->add_option("--z-order", c.z_order, "work modulo z^n")->capture_default_str();
  db->add_option("--c2-order", c.c2_order, "highest c_2 power")->capture_default_str();
  db->add_option("--reference", c.reference, "reference expansion of delta_1 for the diff");
  db->add_flag("!--no-diff", c.diff, "skip the diff report");

  auto* tr = app.add_subcommand("transfer", "transferred classes Tr*(...)");
  add_common(tr, c);
  tr->add_option("--theory", c.theory, "morava | bp")->check(CLI::IsMember({"morava", "bp"}));
  tr->add_option("--what", c.what, "omega | sigma | c1 | one | x-power | norm")
      ->check(CLI::IsMember({"omega", "sigma", "c1", "one", "x-power", "norm"}))
      ->capture_default_str();
  tr->add_option("-k", c.k, "index k or power k");
  tr->add_option("--poly", c.poly, "polynomial in x_1..x_p for --what norm");
  tr->add_option("--x-order", c.x_order, "x-degree bound");
  tr->add_option("--z-order", c.z_order, "BP: work modulo z^n")->capture_default_str();
  tr->add_option("--c2-order", c.c2_order, "BP: highest c_2 power")->capture_default_str();

  auto* eu = app.add_subcommand("euler", "stable Euler classes Tr*(1)");
  add_common(eu, c);
  eu->add_option("family", c.family, "cyclic | product | sigma-p | wreath | semidirect")->required();
  eu->add_option("--theory", c.theory, "morava | bp")->check(CLI::IsMember({"morava", "bp"}));
  eu->add_option("-N,--generators", c.N, "BP generators");
  eu->add_option("-q", c.q, "cyclic order q")->capture_default_str();
  eu->add_option("--qs", c.qs, "orders of the cyclic factors")->delimiter(',');
  eu->add_option("-n", c.n, "n")->capture_default_str();
  eu->add_option("--order", c.order, "z-degree bound");

  auto* pr = app.add_subcommand("present", "ring presentations");
  add_common(pr, c);
  pr->add_option("family", c.family, "sigma-p | wreath");
  pr->add_option("-n", c.n, "n")->capture_default_str();

  auto* ba = app.add_subcommand("basis", "module basis of K(s)^*(B(Z/p^n wr Z/p))");
  add_common(ba, c);
  ba->add_option("-n", c.n, "n")->capture_default_str();

  auto* co = app.add_subcommand("compare-oracle", "differential test against an external oracle");
  add_common(co, c);
  co->add_option("--oracle-cmd", c.oracle_cmd, "command reading a job on stdin, writing a report")->required();
  co->add_option("--job", c.job, "fgl | pseries | sigma-expand | norm-enum")->capture_default_str();
  co->add_option("--theory", c.theory, "morava | bp")->check(CLI::IsMember({"morava", "bp"}));
  co->add_option("-N,--generators", c.N, "BP generators");
  co->add_option("-q", c.q, "q")->capture_default_str();
  co->add_option("-k", c.k, "k (0: all)");
  co->add_option("--order", c.order, "degree bound");
  co->add_option("--x-order", c.x_order, "x-degree bound");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  for (auto* sub : app.get_subcommands()) c.command = sub->get_name();

  try {
    const Emitted e = dispatch(c);
    const std::string doc = render(c, e);
    if (c.output.empty()) {
      out << doc;
    } else {
      std::ofstream f(c.output);
      if (!f) throw ValidationError("cannot write " + c.output);
      f << doc;
    }
    return e.exit_code;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConsistencyError& e) {
    err << "consistency failure: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace chern::cli
