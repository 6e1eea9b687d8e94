#include "densop/cli.hpp"

#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

namespace densop {
namespace cli {

namespace {

std::string fmt_expr(const Expr& e, Format f) {
  return f == Format::Latex ? e.latex() : e.str();
}

void header(std::ostream& os, const char* command, const Scenario& sc, Format f) {
  if (f == Format::Report) {
    os << "# densop " << command << " report\n";
    os << "scenario=" << sc.name << "\n";
    os << "dimension=" << sc.dim << "\n";
    os << "seed=" << sc.domain.seed << "\n";
  } else {
    os << "# densop " << command << ": " << sc.name << "\n";
    os << "dimension = " << sc.dim << "\n";
  }
}

std::string sub3(const char* base, int k, int i, int j, Format f) {
  std::ostringstream os;
  if (f == Format::Latex)
    os << "\\" << base << "^{" << k << "}_{" << i << j << "}";
  else
    os << base << "[" << k << "," << i << "," << j << "]";
  return os.str();
}

void print_kv(std::ostream& os, const std::string& key, const std::string& value, Format f) {
  if (f == Format::Report)
    os << key << "=" << value << "\n";
  else
    os << key << " = " << value << "\n";
}

void print_operator(std::ostream& os, const DensityOperator& op, Format f) {
  print_kv(os, "weight", op.weight.str(), f);
  for (int i = op.lo; i < op.lo + op.dim; ++i)
    for (int j = i; j < op.lo + op.dim; ++j)
      print_kv(os, f == Format::Latex ? "S^{" + std::to_string(i) + std::to_string(j) + "}"
                                      : "S[" + std::to_string(i) + "," + std::to_string(j) + "]",
               fmt_expr(op.S(i, j), f), f);
  for (int i = op.lo; i < op.lo + op.dim; ++i)
    print_kv(os, f == Format::Latex ? "\\gamma^{" + std::to_string(i) + "}"
                                    : "gamma[" + std::to_string(i) + "]",
             fmt_expr(op.G(i), f), f);
  print_kv(os, f == Format::Latex ? "\\theta" : "theta", fmt_expr(op.theta, f), f);
  for (int i = op.lo; i < op.lo + op.dim; ++i)
    print_kv(os, f == Format::Latex ? "a^{" + std::to_string(i) + "}"
                                    : "a[" + std::to_string(i) + "]",
             fmt_expr(op.A(i), f), f);
  print_kv(os, "b", fmt_expr(op.b, f), f);
  print_kv(os, "c", fmt_expr(op.c, f), f);
  if (op.resonance_warning) os << "warning: " << *op.resonance_warning << "\n";
}

void print_bracket(std::ostream& os, const DensityBracket& br, Format f) {
  print_kv(os, "weight", br.weight.str(), f);
  for (int i = br.lo; i < br.lo + br.dim; ++i)
    for (int j = i; j < br.lo + br.dim; ++j)
      print_kv(os, f == Format::Latex ? "S^{" + std::to_string(i) + std::to_string(j) + "}"
                                      : "S[" + std::to_string(i) + "," + std::to_string(j) + "]",
               fmt_expr(br.S(i, j), f), f);
  for (int i = br.lo; i < br.lo + br.dim; ++i)
    print_kv(os, f == Format::Latex ? "\\gamma^{" + std::to_string(i) + "}"
                                    : "gamma[" + std::to_string(i) + "]",
             fmt_expr(br.G(i), f), f);
  print_kv(os, f == Format::Latex ? "\\theta" : "theta", fmt_expr(br.theta, f), f);
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ResonantWeight& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_precondition_error;
  } catch (const ShiftedResonance& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_precondition_error;
  } catch (const NonpositiveDensity& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_precondition_error;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_precondition_error;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_validation_error;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_validation_error;
  }
}

} // namespace

Scenario load_with_overrides(const Options& opt) {
  Scenario sc = load_scenario(opt.scenario_path);
  if (opt.seed) sc.domain.seed = *opt.seed;
  if (opt.tol) sc.domain.tol = *opt.tol;
  if (opt.grid) {
    sc.quadrature.points_per_axis = *opt.grid;
    sc.quadrature.validate();
  }
  return sc;
}

int cmd_project(const Scenario& sc, const Options& opt, std::ostream& os) {
  return guarded([&] {
    if (!sc.connection)
      throw ValidationError("the project command needs a scenario with a \"connection\"");
    ProjectiveClass p = projective_class(*sc.connection);
    header(os, "project", sc, opt.format);
    for (int k = 1; k <= sc.dim; ++k)
      for (int i = 1; i <= sc.dim; ++i)
        for (int j = i; j <= sc.dim; ++j)
          print_kv(os, sub3("Pi", k, i, j, opt.format), fmt_expr(p.at(k, i, j), opt.format),
                   opt.format);
    double defect = p.trace_defect(sc.domain);
    print_kv(os, "trace_defect", std::to_string(defect), opt.format);
    print_kv(os, "trace_check", defect <= sc.domain.tol ? "PASS" : "FAIL", opt.format);
    return defect <= sc.domain.tol ? exit_ok : exit_check_failure;
  });
}

int cmd_lift(const Scenario& sc, const Options& opt, std::ostream& os) {
  return guarded([&] {
    ProjectiveClass p = sc.projective();
    LiftedConnection lifted = lift_connection(p);
    ProjectiveClass induced = induced_projective_class(p);
    header(os, "lift", sc, opt.format);
    for (int k = 0; k <= sc.dim; ++k)
      for (int i = 0; i <= sc.dim; ++i)
        for (int j = i; j <= sc.dim; ++j)
          print_kv(os, sub3("liftGamma", k, i, j, opt.format),
                   fmt_expr(lifted.at(k, i, j), opt.format), opt.format);
    for (int k = 0; k <= sc.dim; ++k)
      for (int i = 0; i <= sc.dim; ++i)
        for (int j = i; j <= sc.dim; ++j)
          print_kv(os, sub3("liftPi", k, i, j, opt.format),
                   fmt_expr(induced.at(k, i, j), opt.format), opt.format);
    return exit_ok;
  });
}

int cmd_extend(const Scenario& sc, const Options& opt, std::ostream& os) {
  return guarded([&] {
    if (!sc.tensor)
      throw ValidationError("the extend command needs a scenario with a \"tensor_density\"");
    ProjectiveClass p = sc.projective();
    DensityOperator op = main_operator(*sc.tensor, p);
    header(os, "extend", sc, opt.format);
    print_operator(os, op, opt.format);
    if (sc.rho) {
      os << (opt.format == Format::Report ? "section=rho_sigma\n" : "# rho/sigma family member\n");
      DensityOperator family = rho_sigma_operator(*sc.tensor, p, *sc.rho, sc.domain);
      print_kv(os, "sigma", sc.rho->weight.str(), opt.format);
      print_operator(os, family, opt.format);
    }
    return exit_ok;
  });
}

int cmd_bracket(const Scenario& sc, const Options& opt, std::ostream& os) {
  return guarded([&] {
    if (!sc.tensor)
      throw ValidationError("the bracket command needs a scenario with a \"tensor_density\"");
    if (!sc.tensor->weight().is_zero())
      throw ValidationError("the bracket command needs a weight-0 tensor density");
    ProjectiveClass p = sc.projective();
    DensityBracket br = extend_bracket(*sc.tensor, p);
    header(os, "bracket", sc, opt.format);
    print_bracket(os, br, opt.format);
    return exit_ok;
  });
}

int cmd_verify(const Scenario& sc, const Options& opt, std::ostream& os) {
  return guarded([&] {
    verify::Report report = verify::run_invariance_battery(sc);
    os << report.text();
    if (report.all_pass()) return exit_ok;
    for (const auto& c : report.checks)
      if (c.status == verify::CheckResult::Status::Error) return exit_validation_error;
    return exit_check_failure;
  });
}

int cmd_emit(const Scenario& sc, const Options& opt, std::ostream& os) {
  return guarded([&] {
    if (!sc.tensor)
      throw ValidationError("the emit command needs a scenario with a \"tensor_density\"");
    ProjectiveClass p = sc.projective();
    DensityOperator op = main_operator(*sc.tensor, p);
    header(os, "emit", sc, opt.format);
    print_operator(os, op, opt.format);
    // assembled symbol, for reading: S^ij d_i d_j + 2 mu gamma^i d_i + ...
    if (opt.format != Format::Report) {
      os << "# applied to phi |Dx|^mu the operator acts as\n";
      os << "#   (S[i,j]*d_i d_j + 2*mu*gamma[i]*d_i + mu^2*theta"
            " + a[i]*d_i + mu*b + c) phi |Dx|^(mu";
      if (!op.weight.is_zero()) os << " + " << op.weight.str();
      os << ")\n";
    }
    return exit_ok;
  });
}

int run(int argc, char** argv) {
  CLI::App app{"densop: canonical second-order operators and brackets on density algebras"};
  app.require_subcommand(1);

  Options opt;
  std::string format_name = "plain";

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--scenario", opt.scenario_path, "scenario file (JSON)")->required();
    cmd->add_option("--seed", opt.seed, "override the sample seed");
    cmd->add_option("--tol", opt.tol, "override the sample tolerance");
    cmd->add_option("--grid", opt.grid, "override quadrature points per axis");
    cmd->add_option("--format", format_name, "plain|latex|report")
        ->check(CLI::IsMember({"plain", "latex", "report"}));
    cmd->add_option("--out", opt.out_path, "write output to a file instead of stdout");
  };

  CLI::App* project = app.add_subcommand("project", "trace-free class of the connection");
  CLI::App* lift = app.add_subcommand("lift", "lifted connection and induced class");
  CLI::App* extend = app.add_subcommand("extend", "canonical operator extending the tensor");
  CLI::App* bracket = app.add_subcommand("bracket", "canonical bracket extension");
  CLI::App* verifyc = app.add_subcommand("verify", "run the verification battery");
  CLI::App* emit = app.add_subcommand("emit", "emit operator coefficients");
  for (CLI::App* c : {project, lift, extend, bracket, verifyc, emit}) add_common(c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? exit_ok : exit_validation_error;
  }

  opt.format = format_name == "latex" ? Format::Latex
                                      : format_name == "report" ? Format::Report : Format::Plain;

  Scenario sc;
  try {
    sc = load_with_overrides(opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_validation_error;
  }

  std::ofstream file;
  std::ostream* os = &std::cout;
  if (opt.out_path) {
    file.open(*opt.out_path);
    if (!file) {
      std::cerr << "error: cannot open output file " << *opt.out_path << "\n";
      return exit_validation_error;
    }
    os = &file;
  }

  if (project->parsed()) return cmd_project(sc, opt, *os);
  if (lift->parsed()) return cmd_lift(sc, opt, *os);
  if (extend->parsed()) return cmd_extend(sc, opt, *os);
  if (bracket->parsed()) return cmd_bracket(sc, opt, *os);
  if (verifyc->parsed()) return cmd_verify(sc, opt, *os);
  if (emit->parsed()) return cmd_emit(sc, opt, *os);
  return exit_validation_error;
}

} // namespace cli
} // namespace densop
