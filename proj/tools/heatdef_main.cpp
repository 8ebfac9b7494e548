// Command-line front door: load a problem definition, run classical solves,
// kernel/series evaluations, or the verification suite, and emit CSV/JSON
// artifacts. Exit codes: 0 ok, 2 configuration error, 3 mathematical-radius
// error (focal point / validity radius), 4 verification failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "heatdef/classical.hpp"
#include "heatdef/deformation.hpp"
#include "heatdef/errors.hpp"
#include "heatdef/oracles.hpp"
#include "heatdef/problem_io.hpp"
#include "heatdef/series.hpp"
#include "heatdef/verify.hpp"

namespace {

using namespace heatdef;
using nlohmann::json;

Complex parse_complex_scalar(std::string text) {
  std::erase_if(text, [](char c) { return c == ' '; });
  if (text.empty()) throw ParseError("empty complex literal");
  if (text.back() != 'i' && text.back() != 'I')
    return Complex(std::stod(text), 0.0);
  text.pop_back();
  // split "a+bi" at the last sign that is not an exponent sign
  for (std::size_t pos = text.size(); pos-- > 1;) {
    if ((text[pos] == '+' || text[pos] == '-') &&
        text[pos - 1] != 'e' && text[pos - 1] != 'E') {
      const std::string re = text.substr(0, pos);
      std::string im = text.substr(pos);
      if (im == "+" ) im = "1";
      if (im == "-") im = "-1";
      return Complex(std::stod(re), std::stod(im));
    }
  }
  if (text.empty() || text == "+") return Complex(0.0, 1.0);
  if (text == "-") return Complex(0.0, -1.0);
  return Complex(0.0, std::stod(text));
}

std::vector<Complex> parse_t_list(const std::string& text) {
  std::vector<Complex> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    Complex t = parse_complex_scalar(item);
    if (t.real() < 0.0)
      throw ParseError("t must satisfy Re t >= 0: " + item);
    out.push_back(t);
  }
  if (out.empty()) throw ParseError("empty t list");
  return out;
}

struct XYPoint {
  CVector x, y;
};

std::vector<XYPoint> parse_xy_list(const std::string& text, int nu) {
  std::vector<XYPoint> out;
  // grid form (nu = 1 only): grid:lo:hi:count:y
  if (text.rfind("grid:", 0) == 0) {
    if (nu != 1) throw ParseError("xy grid form requires nu = 1");
    std::stringstream gs(text.substr(5));
    std::string item;
    std::vector<std::string> parts;
    while (std::getline(gs, item, ':')) parts.push_back(item);
    if (parts.size() != 4) throw ParseError("xy grid form: grid:lo:hi:count:y");
    const double lo = std::stod(parts[0]), hi = std::stod(parts[1]);
    const int count = std::stoi(parts[2]);
    const double yv = std::stod(parts[3]);
    if (count < 2 || hi <= lo) throw ParseError("xy grid form: bad range");
    for (int i = 0; i < count; ++i) {
      XYPoint pt{CVector(1), CVector(1)};
      pt.x[0] = lo + (hi - lo) * i / (count - 1);
      pt.y[0] = yv;
      out.push_back(std::move(pt));
    }
    return out;
  }
  std::stringstream ss(text);
  std::string pair;
  auto parse_vec = [&](const std::string& v) {
    std::vector<double> comps;
    std::stringstream vs(v);
    std::string c;
    while (std::getline(vs, c, ',')) comps.push_back(std::stod(c));
    if (static_cast<int>(comps.size()) != nu)
      throw ParseError("xy component count must equal nu");
    CVector vec(nu);
    for (int i = 0; i < nu; ++i) vec[i] = comps[i];
    return vec;
  };
  while (std::getline(ss, pair, ';')) {
    if (pair.empty()) continue;
    const auto colon = pair.find(':');
    if (colon == std::string::npos)
      throw ParseError("xy point must look like x1,..:y1,..");
    out.push_back(
        {parse_vec(pair.substr(0, colon)), parse_vec(pair.substr(colon + 1))});
  }
  if (out.empty()) throw ParseError("empty xy list");
  return out;
}

json complex_to_json(Complex z) { return json::array({z.real(), z.imag()}); }

json cmatrix_to_json(const CMatrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      row.push_back(complex_to_json(m(r, c)));
    rows.push_back(row);
  }
  return rows;
}

json cvector_to_json(const CVector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    arr.push_back(complex_to_json(v[i]));
  return arr;
}

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << body;
}

int run_classical(const Problem& problem, const std::vector<Complex>& ts,
                  const std::vector<XYPoint>& points, int steps,
                  const std::filesystem::path& out_dir) {
  const CoefficientModel& model = problem.model;
  ElCoefficients coeffs(model);
  json report;
  report["t"] = json::array();
  bool contracts_met = true;
  std::ostringstream action_csv;
  action_csv << "t_re,t_im,x,y,phi_re,phi_im,psi_re,psi_im,phi0_re,phi0_im,"
                "theta_int_re,theta_int_im,p0_re,p0_im\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };

  for (std::size_t it = 0; it < ts.size(); ++it) {
    const Complex t = ts[it];
    TrajectoryBundle bundle = solve_bvp(coeffs, t, steps);

    std::ostringstream traj;
    traj << "s";
    for (const char* tag : {"flat", "sharp"})
      for (int r = 0; r < model.nu; ++r)
        for (int c = 0; c < model.nu; ++c)
          traj << ",re_q_" << tag << "_" << r << "_" << c << ",im_q_" << tag
               << "_" << r << "_" << c;
    traj << "\n";
    for (int i = 0; i <= 64; ++i) {
      const double s = i / 64.0;
      traj << num(s);
      for (const CMatrix& q : {bundle.q_flat(s), bundle.q_sharp(s)})
        for (int r = 0; r < model.nu; ++r)
          for (int c = 0; c < model.nu; ++c)
            traj << "," << num(q(r, c).real()) << "," << num(q(r, c).imag());
      traj << "\n";
    }
    write_file(out_dir / ("trajectories_" + std::to_string(it) + ".csv"),
               traj.str());

    json trep;
    trep["t"] = complex_to_json(t);
    trep["conditioning"] = bundle.conditioning();
    trep["symplectic"] = symplectic_variation(model, coeffs, bundle);
    contracts_met = contracts_met && trep["symplectic"].get<double>() < 1e-9;
    auto [gamma, theta] = gamma_theta(model, coeffs, t);
    trep["gamma"] = complex_to_json(gamma);
    trep["theta"] = complex_to_json(theta);

    json point_reports = json::array();
    for (const auto& pt : points) {
      ActionResult action = action_phi(model, coeffs, bundle, pt.x, pt.y);
      Complex p0(0.0, 0.0);
      if (t != Complex(0.0, 0.0) && t.real() >= 0.0)
        p0 = p0_eval(model, action, t, pt.x, pt.y);
      action_csv << num(t.real()) << "," << num(t.imag()) << ","
                 << num(pt.x[0].real()) << "," << num(pt.y[0].real()) << ","
                 << num(action.phi.real()) << "," << num(action.phi.imag())
                 << "," << num(action.psi.real()) << ","
                 << num(action.psi.imag()) << "," << num(action.phi0.real())
                 << "," << num(action.phi0.imag()) << ","
                 << num(action.theta_integral.real()) << ","
                 << num(action.theta_integral.imag()) << ","
                 << num(p0.real()) << "," << num(p0.imag()) << "\n";

      json prep;
      prep["x"] = cvector_to_json(pt.x);
      prep["y"] = cvector_to_json(pt.y);
      if (t.imag() == 0.0 && t.real() > 0.0) {
        const double tr = t.real();
        prep["eikonal"] = eikonal_residual(model, coeffs, tr, pt.x, pt.y);
        ClassicalIdentityReport idr =
            classical_identity_residuals(model, coeffs, tr, pt.x, pt.y);
        prep["gradient_identity"] = idr.grad_log_p0;
        prep["transport_identity"] = idr.transport;
        contracts_met = contracts_met && prep["eikonal"].get<double>() < 1e-6 &&
                        idr.grad_log_p0 < 1e-6 && idr.transport < 1e-6;
      }
      point_reports.push_back(prep);
    }
    trep["points"] = point_reports;
    report["t"].push_back(trep);
  }
  report["contracts_met"] = contracts_met;
  write_file(out_dir / "classical_report.json", report.dump(2));
  write_file(out_dir / "action_table.csv", action_csv.str());
  return contracts_met ? 0 : 4;
}

int run_kernel(const Problem& problem, const std::vector<Complex>& ts,
               const std::vector<XYPoint>& points, const SeriesOptions& opts,
               const std::filesystem::path& out_dir, bool dump_kernel) {
  json records = json::array();
  std::ostringstream terms_csv;
  terms_csv << "t_re,t_im,x,y,n,abs_vn,tail_bound\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };

  for (std::size_t it = 0; it < ts.size(); ++it) {
    const Complex t = ts[it];
    KernelEvaluator evaluator(problem.model, problem.potential, t, opts);
    if (dump_kernel) {
      std::ostringstream grid_csv;
      evaluator.kernel().dump_csv(grid_csv);
      write_file(out_dir / ("kernel_grid_" + std::to_string(it) + ".csv"),
                 grid_csv.str());
    }
    std::vector<std::future<KernelResult>> futures;
    futures.reserve(points.size());
    for (const auto& pt : points)
      futures.push_back(std::async(std::launch::async, [&evaluator, pt] {
        return evaluator.eval(pt.x, pt.y);
      }));
    for (std::size_t ip = 0; ip < points.size(); ++ip) {
      KernelResult result = futures[ip].get();
      const auto& pt = points[ip];
      json rec;
      rec["t"] = complex_to_json(t);
      rec["x"] = cvector_to_json(pt.x);
      rec["y"] = cvector_to_json(pt.y);
      rec["p0"] = complex_to_json(result.p0);
      rec["pconj"] = cmatrix_to_json(result.pconj);
      rec["p"] = cmatrix_to_json(result.p);
      rec["tail_bound"] = result.tail_bound;
      rec["orders_used"] = result.orders_used;
      records.push_back(rec);
      for (const auto& term : result.terms) {
        terms_csv << num(t.real()) << "," << num(t.imag()) << ","
                  << num(pt.x[0].real()) << "," << num(pt.y[0].real()) << ","
                  << term.order << "," << num(operator_norm(term.value)) << ","
                  << num(truncation_bound(problem.potential,
                                          pt.x.norm() + pt.y.norm(), t,
                                          term.order))
                  << "\n";
      }
    }
  }
  json root;
  root["records"] = records;
  write_file(out_dir / "kernel_records.json", root.dump(2));
  write_file(out_dir / "series_terms.csv", terms_csv.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"heat kernels of time-dependent quadratic operators with "
               "trigonometric potentials"};
  app.require_subcommand(1);

  std::string problem_path, t_text = "0.2", xy_text, out_text = ".";
  int steps = 256, nmax = 6, quad = 12, kernel_quad = 32, grid_nodes = 24,
      probes = 20;
  double tol = 1e-8;
  std::uint64_t seed = 12345;
  bool run_cn = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--problem", problem_path, "problem definition (JSON)")
        ->required();
    cmd->add_option("--t", t_text, "comma-separated t values, e.g. 0.2,0.3i");
    cmd->add_option("--out", out_text, "output directory");
    cmd->add_option("--seed", seed, "seed for randomized probes");
    cmd->add_option("--steps", steps, "RK4 steps for boundary-value solves");
  };

  CLI::App* classical = app.add_subcommand(
      "classical", "trajectories, action tables and identity residuals");
  add_common(classical);
  classical->add_option("--xy", xy_text, "points x1,..:y1,..;x1,..:y1,..");

  bool dump_kernel = false;
  CLI::App* kernel = app.add_subcommand(
      "kernel", "deformation-series kernel evaluation");
  add_common(kernel);
  kernel->add_option("--xy", xy_text, "points x1,..:y1,..;...")->required();
  kernel->add_option("--nmax", nmax, "maximum series order");
  kernel->add_option("--tol", tol, "tail-bound early-stop tolerance");
  kernel->add_option("--quad", quad, "simplex quadrature nodes per dimension");
  kernel->add_option("--kquad", kernel_quad, "tau-quadrature order");
  kernel->add_option("--grid", grid_nodes, "interpolation grid nodes");
  kernel->add_flag("--dump-kernel", dump_kernel,
                   "write the interpolated two-point matrix grid as CSV");

  int verify_nmax = 4, verify_quad = 10;
  CLI::App* verify = app.add_subcommand("verify", "full invariant suite");
  add_common(verify);
  verify->add_option("--nmax", verify_nmax, "series order for residual checks");
  verify->add_option("--tol", tol, "series tolerance");
  verify->add_option("--quad", verify_quad,
                     "simplex quadrature nodes per dimension");
  verify->add_option("--probes", probes, "random probe count");
  verify->add_flag("--cn", run_cn, "include the Crank-Nicolson cross-check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    Problem problem = load_problem(problem_path);
    std::filesystem::path out_dir(out_text);
    std::filesystem::create_directories(out_dir);
    std::vector<Complex> ts = parse_t_list(t_text);

    if (app.got_subcommand(classical)) {
      std::vector<XYPoint> points;
      if (xy_text.empty()) {
        XYPoint pt;
        pt.x = CVector::Constant(problem.model.nu, Complex(0.5, 0.0));
        pt.y = CVector::Constant(problem.model.nu, Complex(-0.5, 0.0));
        points.push_back(pt);
      } else {
        points = parse_xy_list(xy_text, problem.model.nu);
      }
      return run_classical(problem, ts, points, steps, out_dir);
    }
    if (app.got_subcommand(kernel)) {
      auto points = parse_xy_list(xy_text, problem.model.nu);
      SeriesOptions opts;
      opts.n_max = nmax;
      opts.nodes_per_dim = quad;
      opts.tol = tol;
      opts.bundle_steps = steps;
      opts.kernel_quadrature = kernel_quad;
      opts.kernel_grid = grid_nodes;
      return run_kernel(problem, ts, points, opts, out_dir, dump_kernel);
    }
    // verify
    VerifyConfig config;
    config.t_values = ts;
    config.probes = probes;
    config.seed = seed;
    config.n_max = verify_nmax;
    config.nodes_per_dim = verify_quad;
    config.tol = tol;
    config.steps = steps;
    config.run_cn = run_cn;
    config.snapshot_dir = out_dir.string();
    auto results = run_verification(problem, config);
    write_file(out_dir / "verify_report.json", results_to_json(results));
    for (const auto& r : results)
      std::cout << (r.status == "PASS" ? "[PASS] "
                    : r.status == "SKIP" ? "[SKIP] "
                                         : "[FAIL] ")
                << r.name << " value=" << r.value
                << " threshold=" << r.threshold
                << (r.detail.empty() ? "" : " (" + r.detail + ")") << "\n";
    return all_passed(results) ? 0 : 4;
  } catch (const ParseError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const FocalPointError& e) {
    std::cerr << "radius error: " << e.what() << "\n";
    return 3;
  } catch (const OutOfRadiusError& e) {
    std::cerr << "radius error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
