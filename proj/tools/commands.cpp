#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "liouville/errors.hpp"
#include "liouville/liouville_core.hpp"
#include "liouville/simulator.hpp"

namespace liouville::cli {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Parsing helpers

namespace {

double parse_double(const std::string& text, const std::string& what) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw DomainError("cannot parse " + what + " from '" + text + "'");
  }
  return value;
}

std::vector<std::string> split(const std::string& text, char delimiter) {
  std::vector<std::string> parts;
  std::string current;
  std::istringstream stream(text);
  while (std::getline(stream, current, delimiter)) parts.push_back(current);
  if (!text.empty() && text.back() == delimiter) parts.emplace_back();
  return parts;
}

}  // namespace

Tolerances::Tolerances()
    : values_{{"action_first", 1e-4},  {"action_second", 1e-3}, {"certificate", 1e-8},
              {"cross_path", 1e-6},    {"det", 1e-6},           {"drift", 1e-7},
              {"fixed_point", 1e-8},   {"limit", 1e-3},         {"lower_bound_slack", 1e-3},
              {"model", 1e-8},         {"resonance", 1e-9},     {"residual", 1e-9},
              {"scaling", 1e-10},      {"step_fraction", 1e-4}, {"taylor", 1e-5},
              {"trace", 1e-4},         {"zeta", 1e-8}} {}

void Tolerances::set_from_string(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw DomainError("--tol expects NAME=VAL, got '" + assignment + "'");
  const std::string name = assignment.substr(0, eq);
  auto it = values_.find(name);
  if (it == values_.end()) throw DomainError("unknown tolerance '" + name + "'");
  const double value = parse_double(assignment.substr(eq + 1), "tolerance " + name);
  if (!(value > 0.0)) throw DomainError("tolerance " + name + " must be positive");
  it->second = value;
}

double Tolerances::get(const std::string& name) const { return values_.at(name); }

std::vector<double> LambdaGrid::points() const {
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out[i] = lo + (hi - lo) * i / (count - 1);
  out.back() = hi;
  return out;
}

EllipsoidAxes parse_axes(const std::string& text) {
  const auto parts = split(text, ',');
  if (parts.size() != 3) throw DomainError("--axes expects A0,A1,A2");
  return EllipsoidAxes(parse_double(parts[0], "a0"), parse_double(parts[1], "a1"),
                       parse_double(parts[2], "a2"));
}

BilliardKind parse_kind(const std::string& text) {
  if (text == "I") return BilliardKind::First;
  if (text == "II") return BilliardKind::Second;
  throw DomainError("--type expects I or II");
}

LambdaGrid parse_grid(const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.size() != 3) throw DomainError("--lambda-grid expects LO:HI:N");
  LambdaGrid grid;
  grid.lo = parse_double(parts[0], "grid start");
  grid.hi = parse_double(parts[1], "grid end");
  const double count = parse_double(parts[2], "grid size");
  if (count != std::floor(count) || count < 2 || count > 10000) {
    throw DomainError("grid size must be an integer in [2, 10000]");
  }
  grid.count = static_cast<int>(count);
  if (!(grid.lo < grid.hi)) throw DomainError("grid needs LO < HI");
  return grid;
}

std::string kind_label(BilliardKind kind) { return kind == BilliardKind::First ? "I" : "II"; }

std::string format_number(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value,
                                    std::chars_format::general, 17);
  return std::string(buffer, result.ptr);
}

void parallel_for(int count, int jobs, const std::function<void(int)>& body) {
  if (count <= 0) return;
  unsigned workers = jobs > 0 ? static_cast<unsigned>(jobs) : std::thread::hardware_concurrency();
  workers = std::clamp(workers, 1u, static_cast<unsigned>(count));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) body(i);
  };
  if (workers == 1) {
    worker();
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

// ---------------------------------------------------------------------------
// Serialization

Json report_to_json(const TwistReport& r) {
  Json j;
  j["axes"] = {r.axes.a0(), r.axes.a1(), r.axes.a2()};
  j["kind"] = kind_label(r.selector.kind);
  j["lambda"] = r.selector.lambda;
  j["rotation"] = r.rotation;
  j["twist"] = r.twist;
  j["alpha0"] = r.taylor.alpha0;
  j["alpha1"] = r.taylor.alpha1;
  j["alpha2"] = r.taylor.alpha2;
  j["kappa"] = r.taylor.kappa;
  j["elliptic"] = r.classification.is_elliptic;
  j["four_elementary"] = r.classification.is_four_elementary;
  j["nondegenerate"] = r.classification.is_nondegenerate;
  Json bound;
  bound["supremum"] = r.bound.supremum;
  if (r.bound.has_right_limit_lower) bound["right_limit_lower"] = r.bound.right_limit_lower;
  j["bound"] = bound;
  Json cert;
  cert["vanishing_point"] = r.certificate.vanishing_point;
  if (r.selector.kind == BilliardKind::First) {
    cert["e1_quadrature"] = r.certificate.e1_quadrature;
    cert["e1_elliptic"] = r.certificate.e1_elliptic;
    cert["e1_relative_error"] = r.certificate.e1_relative_error;
    cert["modulus"] = r.certificate.modulus;
    cert["zeta"] = r.certificate.zeta;
  }
  cert["passed"] = r.certificate.passed;
  j["certificate"] = cert;
  return j;
}

namespace {

std::string csv_cell(const Json& value) {
  if (value.is_number()) return format_number(value.get<double>());
  if (value.is_boolean()) return value.get<bool>() ? "true" : "false";
  if (value.is_string()) return value.get<std::string>();
  return value.dump();
}

void flatten(const Json& value, const std::string& prefix,
             std::vector<std::pair<std::string, std::string>>& out) {
  if (value.is_object()) {
    for (const auto& [key, child] : value.items()) {
      flatten(child, prefix.empty() ? key : prefix + "." + key, out);
    }
  } else if (value.is_array()) {
    for (std::size_t i = 0; i < value.size(); ++i) {
      flatten(value[i], prefix + "." + std::to_string(i), out);
    }
  } else {
    out.emplace_back(prefix, csv_cell(value));
  }
}

// One header line and one value line.
void write_flat_csv(const Json& object, std::ostream& out) {
  std::vector<std::pair<std::string, std::string>> cells;
  flatten(object, "", cells);
  for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i].first;
  out << '\n';
  for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i].second;
  out << '\n';
}

void write_json(const Json& j, std::ostream& out) { out << j.dump(2) << '\n'; }

// ---------------------------------------------------------------------------
// Commands

struct Options {
  std::string axes;
  std::string type = "I";
  std::optional<double> lambda;
  std::string grid;
  std::vector<std::string> tolerances;
  std::string out;
  std::string format;
  std::uint64_t seed = 20240601;
  int jobs = 0;
  double s = 0.0;
  double pt = 0.0;
  int bounces = -1;
};

struct Context {
  const Options& options;
  Tolerances tolerances;
  std::ostream& out;
  std::ostream& err;
  std::string format;
};

BilliardSelector require_selector(const Context& ctx, const EllipsoidAxes& axes) {
  if (!ctx.options.lambda) throw DomainError("--lambda is required");
  BilliardSelector selector{parse_kind(ctx.options.type), *ctx.options.lambda};
  validate_selector(axes, selector);
  return selector;
}

int cmd_invariants(const Context& ctx) {
  const EllipsoidAxes axes = parse_axes(ctx.options.axes);
  const BilliardSelector selector = require_selector(ctx, axes);
  const TwistReport report = full_report(axes, selector, ctx.tolerances.get("resonance"),
                                         ctx.tolerances.get("certificate"));
  const Json j = report_to_json(report);
  if (ctx.format == "csv") {
    write_flat_csv(j, ctx.out);
  } else {
    write_json(j, ctx.out);
  }
  return kExitSuccess;
}

struct ScanRow {
  double lambda = 0.0;
  double rotation = 0.0;
  double twist = 0.0;
  FixedPointClass classification;
  std::exception_ptr error;
};

int cmd_scan(const Context& ctx) {
  const EllipsoidAxes axes = parse_axes(ctx.options.axes);
  const BilliardKind kind = parse_kind(ctx.options.type);
  const auto [lo, hi] = lambda_interval(axes, kind);
  const std::vector<double> lambdas = ctx.options.grid.empty()
                                          ? certification_grid(lo, hi)
                                          : parse_grid(ctx.options.grid).points();
  for (double lambda : lambdas) validate_selector(axes, {kind, lambda});

  const double resonance = ctx.tolerances.get("resonance");
  std::vector<ScanRow> rows(lambdas.size());
  parallel_for(static_cast<int>(rows.size()), ctx.options.jobs, [&](int i) {
    ScanRow& row = rows[i];
    row.lambda = lambdas[i];
    try {
      row.rotation = rotation_closed_form(axes, {kind, row.lambda});
      row.twist = twist_closed_form(axes, {kind, row.lambda});
      row.classification = classify(row.rotation, row.twist, resonance);
    } catch (...) {
      row.error = std::current_exception();
    }
  });

  const bool first = kind == BilliardKind::First;
  const RotationBounds bound = rotation_bound(axes, kind);
  bool monotone = true;
  bool sign_uniform = true;
  bool within_bound = true;
  std::size_t done = 0;
  for (; done < rows.size() && !rows[done].error; ++done) {
    const ScanRow& row = rows[done];
    sign_uniform = sign_uniform && (first ? row.twist < 0.0 : row.twist > 0.0);
    within_bound = within_bound && row.rotation < 0.0 && -row.rotation < bound.supremum;
    if (done > 0) {
      const double step = -row.rotation - (-rows[done - 1].rotation);
      monotone = monotone && (first ? step < 0.0 : step > 0.0);
    }
  }
  const bool complete = done == rows.size();
  const bool passed = complete && monotone && sign_uniform && within_bound;

  if (ctx.format == "json") {
    Json j;
    j["axes"] = {axes.a0(), axes.a1(), axes.a2()};
    j["kind"] = kind_label(kind);
    Json list = Json::array();
    for (std::size_t i = 0; i < done; ++i) {
      list.push_back({{"lambda", rows[i].lambda},
                      {"rotation", rows[i].rotation},
                      {"twist", rows[i].twist},
                      {"elliptic", rows[i].classification.is_elliptic},
                      {"four_elementary", rows[i].classification.is_four_elementary}});
    }
    j["rows"] = list;
    j["summary"] = {{"rows", done},
                    {"complete", complete},
                    {"monotone", monotone},
                    {"twist_sign_uniform", sign_uniform},
                    {"within_bound", within_bound},
                    {"bound", bound.supremum}};
    write_json(j, ctx.out);
  } else {
    ctx.out << "lambda,rotation,twist,elliptic,four_elementary\n";
    for (std::size_t i = 0; i < done; ++i) {
      const ScanRow& r = rows[i];
      ctx.out << format_number(r.lambda) << ',' << format_number(r.rotation) << ','
              << format_number(r.twist) << ',' << (r.classification.is_elliptic ? "true" : "false")
              << ',' << (r.classification.is_four_elementary ? "true" : "false") << '\n';
    }
    ctx.out << "#summary,rows=" << done << ",complete=" << (complete ? "true" : "false")
            << ",monotone=" << (monotone ? "true" : "false")
            << ",twist_sign_uniform=" << (sign_uniform ? "true" : "false")
            << ",within_bound=" << (within_bound ? "true" : "false")
            << ",bound=" << format_number(bound.supremum) << '\n';
  }
  ctx.out.flush();
  if (!complete) std::rethrow_exception(rows[done].error);
  if (!passed) {
    ctx.err << "scan: sign, monotonicity or bound violated on the grid\n";
    return kExitVerification;
  }
  return kExitSuccess;
}

int cmd_exceptional(const Context& ctx) {
  const EllipsoidAxes axes = parse_axes(ctx.options.axes);
  const BilliardKind kind = parse_kind(ctx.options.type);
  const auto list = exceptional_lambdas(axes, kind, ctx.tolerances.get("residual"));
  Json j;
  j["axes"] = {axes.a0(), axes.a1(), axes.a2()};
  j["kind"] = kind_label(kind);
  j["bound"] = rotation_bound(axes, kind).supremum;
  j["endpoint_limit"] = rotation_endpoint_limit(axes, kind);
  j["count"] = list.size();
  Json entries = Json::array();
  for (const auto& e : list) {
    entries.push_back({{"lambda", e.lambda},
                       {"target", e.target},
                       {"rotation", e.rotation},
                       {"fractional_rotation", fractional_part(e.rotation)},
                       {"residual", e.residual},
                       {"integer_resonance", e.integer_resonance}});
  }
  j["exceptional"] = entries;
  if (ctx.format == "csv") {
    ctx.out << "lambda,target,rotation,residual,integer_resonance\n";
    for (const auto& e : list) {
      ctx.out << format_number(e.lambda) << ',' << format_number(e.target) << ','
              << format_number(e.rotation) << ',' << format_number(e.residual) << ','
              << (e.integer_resonance ? "true" : "false") << '\n';
    }
  } else {
    write_json(j, ctx.out);
  }
  return kExitSuccess;
}

int cmd_verify(const Context& ctx) {
  VerifyConfig config{parse_axes(ctx.options.axes), ctx.tolerances, ctx.options.seed,
                      ctx.options.bounces >= 0 ? ctx.options.bounces : 1000, ctx.options.jobs};
  const auto checks = run_verification(config);
  bool passed = true;
  const CheckResult* first_failure = nullptr;
  for (const auto& c : checks) {
    if (!c.passed && !first_failure) first_failure = &c;
    passed = passed && c.passed;
  }
  if (ctx.format == "csv") {
    ctx.out << "check,passed,value,tolerance,detail\n";
    for (const auto& c : checks) {
      ctx.out << c.name << ',' << (c.passed ? "true" : "false") << ',' << format_number(c.value)
              << ',' << format_number(c.tolerance) << ',' << c.detail << '\n';
    }
  } else {
    Json j;
    j["axes"] = {config.axes.a0(), config.axes.a1(), config.axes.a2()};
    j["seed"] = config.seed;
    j["bounces"] = config.bounces;
    j["passed"] = passed;
    Json list = Json::array();
    for (const auto& c : checks) {
      list.push_back({{"name", c.name},
                      {"passed", c.passed},
                      {"value", c.value},
                      {"tolerance", c.tolerance},
                      {"detail", c.detail}});
    }
    j["checks"] = list;
    write_json(j, ctx.out);
  }
  if (first_failure) {
    ctx.err << "verify: check '" << first_failure->name << "' failed: " << first_failure->detail
            << '\n';
    return kExitVerification;
  }
  return kExitSuccess;
}

int cmd_simulate(const Context& ctx) {
  const EllipsoidAxes axes = parse_axes(ctx.options.axes);
  const BilliardSelector selector = require_selector(ctx, axes);
  SimulatorOptions sim_options;
  sim_options.step_fraction = ctx.tolerances.get("step_fraction");
  const BilliardSimulator sim(axes, selector, sim_options);
  const int bounces = ctx.options.bounces >= 0 ? ctx.options.bounces : 100;
  const auto rows = sim.trajectory({ctx.options.s, ctx.options.pt}, bounces);
  if (ctx.format == "json") {
    Json list = Json::array();
    for (const auto& r : rows) {
      list.push_back({{"bounce", r.index}, {"s", r.s}, {"p_t", r.p_t}, {"h", r.h}});
    }
    write_json({{"axes", {axes.a0(), axes.a1(), axes.a2()}},
                {"kind", kind_label(selector.kind)},
                {"lambda", selector.lambda},
                {"rows", list}},
               ctx.out);
  } else {
    ctx.out << "bounce,s,p_t,h\n";
    for (const auto& r : rows) {
      ctx.out << r.index << ',' << format_number(r.s) << ',' << format_number(r.p_t) << ','
              << format_number(r.h) << '\n';
    }
  }
  return kExitSuccess;
}

int cmd_model_table(const Context& ctx) {
  const LiouvilleProfile profile = model_profile();
  validate_profile(profile);
  const TaylorData taylor = taylor_from_profile(profile);
  const double rotation = rotation_at_center(profile, taylor);
  const double twist = twist_at_center(profile, taylor);
  const double log_term = std::log(1.0 + std::numbers::sqrt2);
  const ActionDerivatives action = action_derivatives_at_peak(profile);
  const FixedPointClass c = classify(rotation, twist, ctx.tolerances.get("resonance"));
  Json j;
  j["profile"] = {{"f", "sin^2(2 pi x)"}, {"q", "-y^2"}, {"N", 1.0}, {"period", 1.0}};
  j["rotation"] = rotation;
  j["twist"] = twist;
  j["rotation_exact"] = -4.0 * log_term;
  j["twist_exact"] = -2.0 * (std::numbers::sqrt2 - log_term);
  j["alpha0"] = taylor.alpha0;
  j["alpha1"] = taylor.alpha1;
  j["alpha2"] = taylor.alpha2;
  j["kappa"] = taylor.kappa;
  j["dI_dh"] = action.first;
  j["d2I_dh2"] = action.second;
  j["elliptic"] = c.is_elliptic;
  j["four_elementary"] = c.is_four_elementary;
  j["nondegenerate"] = c.is_nondegenerate;
  if (ctx.format == "csv") {
    write_flat_csv(j, ctx.out);
  } else {
    write_json(j, ctx.out);
  }
  return kExitSuccess;
}

}  // namespace

// ---------------------------------------------------------------------------

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rotation number and twist of Liouville billiards on a triaxial ellipsoid",
               "liouville-twist"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&o](CLI::App* sub) {
    sub->add_option("--tol", o.tolerances, "Tolerance override NAME=VAL (repeatable)");
    sub->add_option("--out", o.out, "Write the result to this file instead of stdout");
    sub->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--jobs", o.jobs, "Worker threads (0: hardware concurrency)")
        ->check(CLI::NonNegativeNumber);
  };
  auto add_axes = [&o](CLI::App* sub) {
    sub->add_option("--axes", o.axes, "Squared semi-axes A0,A1,A2")->required();
  };
  auto add_type = [&o](CLI::App* sub, bool required) {
    auto* opt = sub->add_option("--type", o.type, "Billiard type I or II")
                    ->check(CLI::IsMember({"I", "II"}));
    if (required) opt->required();
  };
  auto add_lambda = [&o](CLI::App* sub) {
    sub->add_option("--lambda", o.lambda, "Confocal parameter")->required();
  };

  CLI::App* invariants = app.add_subcommand("invariants", "Full twist report for one table");
  add_axes(invariants);
  add_type(invariants, true);
  add_lambda(invariants);
  add_common(invariants);

  CLI::App* scan = app.add_subcommand("scan", "Rotation and twist over a lambda grid");
  add_axes(scan);
  add_type(scan, true);
  scan->add_option("--lambda-grid", o.grid, "LO:HI:N (default: 50 Chebyshev points)");
  add_common(scan);

  CLI::App* exceptional =
      app.add_subcommand("exceptional", "Tables that fail to be elliptic or 4-elementary");
  add_axes(exceptional);
  add_type(exceptional, true);
  add_common(exceptional);

  CLI::App* verify = app.add_subcommand("verify", "Run the cross-oracle verification suite");
  add_axes(verify);
  verify->add_option("--seed", o.seed, "Seed of the random simulator start points");
  verify->add_option("--bounces", o.bounces, "Iterations of P for the drift check")
      ->check(CLI::NonNegativeNumber);
  add_common(verify);

  CLI::App* simulate = app.add_subcommand("simulate", "Dump a P-orbit of the billiard");
  add_axes(simulate);
  add_type(simulate, true);
  add_lambda(simulate);
  simulate->add_option("--s", o.s, "Initial arclength from the vertex");
  simulate->add_option("--pt", o.pt, "Initial tangential momentum");
  simulate->add_option("--bounces", o.bounces, "Number of iterations of P (default 100)")
      ->check(CLI::NonNegativeNumber);
  add_common(simulate);

  CLI::App* model = app.add_subcommand("model-table", "Invariants of the built-in model profile");
  add_common(model);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitSuccess : kExitUsage;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  std::string format = o.format;
  if (format.empty()) format = (command == "scan" || command == "simulate") ? "csv" : "json";

  try {
    Tolerances tolerances;
    for (const auto& t : o.tolerances) tolerances.set_from_string(t);

    std::ofstream file;
    if (!o.out.empty()) {
      file.open(o.out, std::ios::binary);
      if (!file) throw DomainError("cannot open output file '" + o.out + "'");
    }
    std::ostream& sink = o.out.empty() ? out : file;
    const Context ctx{o, tolerances, sink, err, format};

    if (command == "invariants") return cmd_invariants(ctx);
    if (command == "scan") return cmd_scan(ctx);
    if (command == "exceptional") return cmd_exceptional(ctx);
    if (command == "verify") return cmd_verify(ctx);
    if (command == "simulate") return cmd_simulate(ctx);
    return cmd_model_table(ctx);
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << '\n';
    return kExitVerification;
  }
}

}  // namespace liouville::cli
