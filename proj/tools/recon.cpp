// recon: command-line front end for the srecon library.
//
//   recon ecme|iht|dore --matrix H.csv --y y.csv --r K [--tol T] [--max-iter N] [--out result.json]
//   recon adore --matrix H.csv --y y.csv --L 1 [--out result.json]
//   recon analyze --matrix H.csv --r-max K [--exact | --sampled --samples S]
//   recon phantom --side 64 --lines 22 --method dore [--r K]
//   recon bench --config bench.cfg [--csv rows.csv] [--json summary.json]
//
// Exit codes: 0 success, 2 input error, 3 size-guard error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "srecon/io.hpp"
#include "srecon/srecon.hpp"

namespace {

using namespace srecon;
using nlohmann::json;

constexpr int kExitInput = 2;
constexpr int kExitSizeGuard = 3;

void emit(const json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream f(path);
  if (!f) throw InputError("cannot write " + path);
  f << j.dump(2) << '\n';
}

json signal_json(const Vector& s) {
  json arr = json::array();
  for (Index i = 0; i < s.size(); ++i) arr.push_back(s[i]);
  return arr;
}

struct SolveArgs {
  std::string matrix, y, out, s0;
  Index r = 1;
  Index L = 1;
  double tol = 1e-14;
  long max_iter = 50000;
};

int run_solver(const std::string& method, const SolveArgs& a) {
  const auto op = SensingOperator::dense(io::read_matrix_csv(a.matrix));
  const Vector y = io::read_vector_csv(a.y);
  if (y.size() != op.n_rows()) throw InputError("y length differs from rows of H");
  const StoppingRule stop{a.tol, a.max_iter};
  if (method == "adore") {
    const AdoreResult res = adore_run(op, y, a.L, stop);
    json j = io::to_json(res);
    j["method"] = "adore";
    j["s"] = signal_json(res.final.estimate.s);
    emit(j, a.out);
    return 0;
  }
  Vector s0 = Vector::Zero(op.n_cols());
  if (!a.s0.empty()) s0 = io::read_vector_csv(a.s0);
  ReconstructionResult res;
  if (method == "ecme") res = ecme_run(op, y, a.r, s0, stop);
  else if (method == "iht") res = iht_run(op, y, a.r, s0, stop);
  else res = dore_run(op, y, a.r, s0, stop);
  json j = io::to_json(res, method == "dore");
  j["method"] = method;
  j["s"] = signal_json(res.estimate.s);
  emit(j, a.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse signal reconstruction by ECME / IHT / DORE / ADORE hard thresholding"};
  app.require_subcommand(1);

  SolveArgs solve;
  for (const char* name : {"ecme", "iht", "dore"}) {
    auto* sub = app.add_subcommand(name, std::string(name) + " reconstruction at a known sparsity level");
    sub->add_option("--matrix", solve.matrix, "Sensing matrix CSV (N rows, m columns)")->required();
    sub->add_option("--y", solve.y, "Measurement vector CSV")->required();
    sub->add_option("--r", solve.r, "Sparsity level")->required()->check(CLI::NonNegativeNumber);
    sub->add_option("--tol", solve.tol, "Stop when ||s+ - s||^2 / m < tol")->check(CLI::PositiveNumber);
    sub->add_option("--max-iter", solve.max_iter, "Iteration cap")->check(CLI::PositiveNumber);
    sub->add_option("--s0", solve.s0, "Initial signal CSV (default zero)");
    sub->add_option("--out", solve.out, "Result JSON path (default stdout)");
  }
  auto* adore = app.add_subcommand("adore", "DORE with sparsity level chosen by golden-section USS search");
  adore->add_option("--matrix", solve.matrix, "Sensing matrix CSV")->required();
  adore->add_option("--y", solve.y, "Measurement vector CSV")->required();
  adore->add_option("--L", solve.L, "Search resolution")->check(CLI::PositiveNumber);
  adore->add_option("--tol", solve.tol, "DORE stopping tolerance")->check(CLI::PositiveNumber);
  adore->add_option("--max-iter", solve.max_iter, "DORE iteration cap")->check(CLI::PositiveNumber);
  adore->add_option("--out", solve.out, "Result JSON path (default stdout)");

  std::string an_matrix, an_out;
  Index r_max = 1;
  bool sampled = false;
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
  auto* analyze = app.add_subcommand("analyze", "Exact SSQ / RIC / spark certificate of a sensing matrix");
  analyze->add_option("--matrix", an_matrix, "Sensing matrix CSV")->required();
  analyze->add_option("--r-max", r_max, "Largest sparsity level to certify")->required()->check(CLI::PositiveNumber);
  auto* exact_flag = analyze->add_flag("--exact", "Exhaustive enumeration (default)");
  analyze->add_flag("--sampled", sampled, "Random support sampling (bounds only, not a certificate)")
      ->excludes(exact_flag);
  analyze->add_option("--samples", samples, "Supports sampled per level in --sampled mode");
  analyze->add_option("--seed", seed, "Sampling seed");
  analyze->add_option("--out", an_out, "Certificate JSON path (default stdout)");

  Index side = 64, lines = 22;
  std::optional<Index> ph_r;
  std::string ph_method = "dore", ph_out, ph_mask_out;
  Index ph_L = 64;
  auto* ph = app.add_subcommand("phantom", "Reconstruct the Shepp-Logan phantom from radial Fourier samples");
  ph->add_option("--side", side, "Image side (power of two, >= 32)");
  ph->add_option("--lines", lines, "Number of radial lines")->check(CLI::PositiveNumber);
  ph->add_option("--method", ph_method, "ecme | iht | dore | adore | mn")
      ->check(CLI::IsMember({"ecme", "iht", "dore", "adore", "mn"}));
  ph->add_option("--r", ph_r, "Sparsity level (default: true Haar support size)");
  ph->add_option("--L", ph_L, "ADORE search resolution")->check(CLI::PositiveNumber);
  ph->add_option("--tol", solve.tol, "Stopping tolerance")->check(CLI::PositiveNumber);
  ph->add_option("--max-iter", solve.max_iter, "Iteration cap")->check(CLI::PositiveNumber);
  ph->add_option("--mask-out", ph_mask_out, "Write the sampling mask as 0/1 CSV");
  ph->add_option("--out", ph_out, "Report JSON path (default stdout)");

  std::string cfg_path, csv_out, json_out;
  auto* bench = app.add_subcommand("bench", "Phantom sweep over sampling densities and methods");
  bench->add_option("--config", cfg_path, "key=value configuration file")->required();
  bench->add_option("--csv", csv_out, "Per-run CSV rows (default stdout)");
  bench->add_option("--json", json_out, "JSON summary path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    for (const char* name : {"ecme", "iht", "dore", "adore"})
      if (app.got_subcommand(name)) return run_solver(name, solve);

    if (app.got_subcommand(analyze)) {
      const Matrix h = io::read_matrix_csv(an_matrix);
      if (sampled) {
        json levels = json::array();
        for (Index r = 1; r <= std::min(2 * r_max, h.cols()); ++r)
          levels.push_back(io::to_json(sampled_measures(h, r, samples, seed), r));
        emit({{"exact", false}, {"levels", levels}}, an_out);
      } else {
        emit(io::to_json(certify(h, r_max)), an_out);
      }
      return 0;
    }

    if (app.got_subcommand(ph)) {
      const ProblemInstance p = phantom_instance(side, lines);
      if (!ph_mask_out.empty()) {
        std::ofstream f(ph_mask_out);
        io::write_mask_csv(f, radial_mask(side, lines).symmetrized());
      }
      const StoppingRule stop{solve.tol, solve.max_iter};
      const Vector zero = Vector::Zero(p.op.n_cols());
      const Index r = ph_r.value_or(*p.truth_support_size);
      json j{{"method", ph_method}, {"side", side}, {"lines", lines}, {"N", p.op.n_rows()}, {"m", p.op.n_cols()},
             {"n_over_m", static_cast<double>(p.op.n_rows()) / static_cast<double>(p.op.n_cols())},
             {"true_support_size", *p.truth_support_size}};
      Vector est;
      if (ph_method == "mn") {
        est = minimum_norm_estimate(p.op, p.y);
      } else if (ph_method == "adore") {
        const AdoreResult res = adore_run(p.op, p.y, ph_L, stop);
        est = res.final.estimate.s;
        j["adore"] = io::to_json(res);
        j["r"] = res.r_selected;
      } else {
        ReconstructionResult res = ph_method == "dore"  ? dore_run(p.op, p.y, r, zero, stop)
                                   : ph_method == "iht" ? iht_run(p.op, p.y, r, zero, stop)
                                                        : ecme_run(p.op, p.y, r, zero, stop);
        est = res.estimate.s;
        j["r"] = r;
        j["iterations"] = res.iterations;
        j["converged"] = res.converged;
        j["elapsed_seconds"] = res.elapsed_seconds;
      }
      j["psnr_db"] = io::number(image_psnr(p, est));
      emit(j, ph_out);
      return 0;
    }

    if (app.got_subcommand(bench)) {
      std::ifstream f(cfg_path);
      if (!f) throw InputError("cannot open " + cfg_path);
      const auto rows = benchmark_sweep(io::parse_bench_config(f));
      if (csv_out.empty()) {
        io::write_reports_csv(std::cout, rows);
      } else {
        std::ofstream out(csv_out);
        io::write_reports_csv(out, rows);
      }
      if (!json_out.empty()) emit(io::to_json(rows), json_out);
      return 0;
    }
  } catch (const SizeGuardError& e) {
    std::cerr << "recon: " << e.what() << '\n';
    return kExitSizeGuard;
  } catch (const InputError& e) {
    std::cerr << "recon: " << e.what() << '\n';
    return kExitInput;
  } catch (const ImproperOperatorError& e) {
    std::cerr << "recon: " << e.what() << '\n';
    return kExitInput;
  }
  return 0;
}
