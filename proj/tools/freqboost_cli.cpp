#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "freqboost/error.hpp"
#include "freqboost/experiments.hpp"
#include "freqboost/fit.hpp"
#include "freqboost/markov.hpp"
#include "freqboost/simulation.hpp"

namespace fb = freqboost;

namespace {

constexpr std::size_t kPrintStatesLimit = 64;

// Exactly one of --s / --L; both accept comma lists where the command allows
// several capacities.
struct CapacityFlags {
  std::vector<double> increments;
  std::vector<int> capacities;
  CLI::Option* s_option = nullptr;
  CLI::Option* L_option = nullptr;
};

void add_capacity_flags(CLI::App* cmd, CapacityFlags& flags, bool many) {
  const std::string what = many ? " (comma list allowed)" : "";
  flags.s_option = cmd->add_option("--s", flags.increments,
                                    "increment of learning s = 1/L; must be 1/L for an integer "
                                    "L >= 2" + what)
                       ->delimiter(',');
  flags.L_option = cmd->add_option("--L", flags.capacities, "learner capacity L = 1/s" + what)
                       ->delimiter(',');
  flags.s_option->excludes(flags.L_option);
  if (!many) {
    flags.s_option->expected(1);
    flags.L_option->expected(1);
  }
}

std::vector<int> resolve_capacities(const CapacityFlags& flags) {
  std::vector<int> out;
  for (double s : flags.increments) out.push_back(fb::capacity_from_increment(s));
  for (int L : flags.capacities) {
    if (L < 2) fb::fail(fb::ErrorCode::invalid_argument, "--L must be >= 2");
    out.push_back(L);
  }
  if (out.empty()) fb::fail(fb::ErrorCode::invalid_argument, "exactly one of --s or --L is required");
  return out;
}

fb::SourceDistribution make_source(int forms, const std::vector<double>& nu) {
  if (static_cast<int>(nu.size()) != forms) {
    fb::fail(fb::ErrorCode::invalid_argument, "--nu has " + std::to_string(nu.size()) +
                                                  " entries, expected M = " + std::to_string(forms));
  }
  return fb::SourceDistribution(nu);
}

// Owns the file stream when --out names a file; "-" is stdout.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) fb::fail(fb::ErrorCode::io, "cannot open " + path + " for writing");
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }
  void finish() {
    stream().flush();
    if (!stream()) fb::fail(fb::ErrorCode::io, "write failed");
  }

 private:
  std::unique_ptr<std::ofstream> file_;
};

fb::StationaryMethod parse_method(const std::string& name) {
  if (name == "direct") return fb::StationaryMethod::direct;
  if (name == "power") return fb::StationaryMethod::power_iteration;
  return fb::StationaryMethod::automatic;
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k) out += ',';
    out += fb::format_real(values[k]);
  }
  return out;
}

int exit_code_for(fb::ErrorCode code) {
  return code == fb::ErrorCode::invalid_argument || code == fb::ErrorCode::state_space_too_large
             ? 2
             : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frequency boosting in a teacher-learner model of language acquisition."};
  app.require_subcommand(1, 1);
  app.get_formatter()->column_width(34);

  int forms = 2;
  CapacityFlags capacity;
  std::vector<double> nu;
  std::uint64_t seed = fb::default_seed;
  unsigned threads = 0;
  std::string out_path = "-";
  std::optional<std::int64_t> iterations;
  std::optional<std::int64_t> trials;
  std::size_t max_states = fb::ChainOptions{}.max_states;
  const std::string seed_help =
      "master seed; runs are reproducible from it (default " + std::to_string(fb::default_seed) +
      ")";
  const std::string threads_help = "worker threads, 0 = all cores; output does not depend on it";

  // stationary
  auto* stationary_cmd =
      app.add_subcommand("stationary", "solve the learner Markov chain for its stationary law");
  std::string method = "auto";
  std::string states_path;
  stationary_cmd->add_option("--M", forms, "number of forms")->check(CLI::Range(2, 64));
  add_capacity_flags(stationary_cmd, capacity, false);
  stationary_cmd->add_option("--nu", nu, "source probabilities nu1,...,nuM")
      ->delimiter(',')
      ->required();
  stationary_cmd->add_option("--method", method, "auto | direct | power")
      ->check(CLI::IsMember({"auto", "direct", "power"}));
  stationary_cmd->add_option("--max-states", max_states, "lattice size cap");
  stationary_cmd->add_option("--out", states_path,
                             "also write every state and its probability to this CSV");

  // boost-curve
  auto* boost_cmd = app.add_subcommand(
      "boost-curve", "Monte Carlo and analytic learner frequency against source frequency");
  std::vector<double> nu_grid;
  int report_form = 1;
  boost_cmd->add_option("--M", forms, "number of forms; for M >= 3 the other forms split "
                                      "1 - nu1 equally")
      ->check(CLI::Range(2, 64));
  add_capacity_flags(boost_cmd, capacity, true);
  boost_cmd->add_option("--nu-grid", nu_grid, "dominant-form source frequencies nu1")
      ->delimiter(',')
      ->required();
  boost_cmd->add_option("--iters", iterations, "iterations per trial (default 30000)");
  boost_cmd->add_option("--trials", trials, "trials per grid point (default 200)");
  boost_cmd->add_option("--form", report_form, "reported form, 1-based");
  boost_cmd->add_option("--seed", seed, seed_help);
  boost_cmd->add_option("--threads", threads, threads_help);
  boost_cmd->add_option("--out", out_path, "CSV output path, - for stdout");

  // trajectory
  auto* trajectory_cmd = app.add_subcommand("trajectory", "per-step learner frequencies of one run");
  std::int64_t trial_index = 0;
  std::int64_t stride = 1;
  std::vector<std::int64_t> init_units;
  trajectory_cmd->add_option("--M", forms, "number of forms")->check(CLI::Range(2, 64));
  add_capacity_flags(trajectory_cmd, capacity, false);
  trajectory_cmd->add_option("--nu", nu, "source probabilities nu1,...,nuM")
      ->delimiter(',')
      ->required();
  trajectory_cmd->add_option("--iters", iterations, "iterations (default 1000)");
  trajectory_cmd->add_option("--trial", trial_index, "trial index within the seed's ensemble");
  trajectory_cmd->add_option("--stride", stride, "write every stride-th step");
  trajectory_cmd->add_option("--init", init_units,
                             "initial quanta per form, summing to L*(M-1) (default: as uniform "
                             "as the lattice allows)")
      ->delimiter(',');
  trajectory_cmd->add_option("--seed", seed, seed_help);
  trajectory_cmd->add_option("--out", out_path, "CSV output path, - for stdout");

  // converge
  auto* converge_cmd =
      app.add_subcommand("converge", "time for the moving average to reach the expected frequency");
  std::size_t window = 200;
  double eps = 0.001;
  converge_cmd->add_option("--M", forms, "number of forms")->check(CLI::Range(2, 64));
  add_capacity_flags(converge_cmd, capacity, true);
  converge_cmd->add_option("--nu", nu, "source probabilities nu1,...,nuM")
      ->delimiter(',')
      ->required();
  converge_cmd->add_option("--window", window, "moving-average window w");
  converge_cmd->add_option("--eps", eps, "tolerance around the target frequency");
  converge_cmd->add_option("--iters", iterations, "iteration cap per trial (default 50000)");
  converge_cmd->add_option("--trials", trials, "trials (default 200)");
  converge_cmd->add_option("--form", report_form, "tracked form, 1-based");
  converge_cmd->add_option("--max-states", max_states, "lattice cap for the M >= 3 target");
  converge_cmd->add_option("--seed", seed, seed_help);
  converge_cmd->add_option("--threads", threads, threads_help);
  converge_cmd->add_option("--out", out_path, "CSV output path, - for stdout");

  // experiment
  auto* experiment_cmd = app.add_subcommand("experiment", "run a predefined figure pipeline");
  std::string figure;
  std::vector<std::string> figure_names;
  for (auto id : fb::figure_ids()) figure_names.emplace_back(id);
  experiment_cmd->add_option("--figure", figure, "figure id")
      ->required()
      ->check(CLI::IsMember(figure_names));
  experiment_cmd->add_option("--iters", iterations, "override the iteration count");
  experiment_cmd->add_option("--trials", trials, "override the trial count");
  experiment_cmd->add_option("--seed", seed, seed_help);
  experiment_cmd->add_option("--threads", threads, threads_help);
  experiment_cmd->add_option("--out", out_path, "CSV output path, - for stdout");

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "fit L to observed parent/learner frequencies");
  std::string data_path;
  fb::FitOptions fit_options;
  std::string curve_path;
  fit_cmd->add_option("--data", data_path, "CSV with header label,category,parent1,parent2,simon")
      ->required();
  fit_cmd->add_option("--M", forms, "2 or 3; M = 3 solves one large chain per grid point and "
                                    "input, so wide grids take minutes")
      ->check(CLI::IsMember({2, 3}));
  fit_cmd->add_option("--L-min", fit_options.min_capacity, "smallest L in the grid");
  fit_cmd->add_option("--L-max", fit_options.max_capacity, "largest L in the grid");
  fit_cmd->add_option("--weight", fit_options.parent1_weight,
                      "weight of parent1 in the input frequency");
  fit_cmd->add_option("--curve", curve_path, "write the fitted curve (input,predicted) here");
  fit_cmd->add_option("--max-states", max_states, "lattice size cap for M = 3");
  fit_cmd->add_option("--threads", threads, threads_help);
  fit_cmd->add_option("--out", out_path, "report output path, - for stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) return app.exit(e);
    std::cerr << "error: invalid_argument: " << e.what() << '\n';
    return 2;
  }

  try {
    fb::ChainOptions chain;
    chain.max_states = max_states;

    if (stationary_cmd->parsed()) {
      const int L = resolve_capacities(capacity).front();
      const auto source = make_source(forms, nu);
      fb::StationaryOptions options;
      options.method = parse_method(method);
      const auto model = fb::build_chain(forms, L, source, chain);
      const auto solved = fb::stationary(model, options);
      const auto p = fb::expected_frequencies_numeric(model, solved);

      auto& out = std::cout;
      out << "M=" << forms << " L=" << L << " s=" << fb::format_real(1.0 / L) << " nu=" << join(nu)
          << " states=" << model.size() << " recurrent=" << solved.recurrent_states << '\n';
      const auto write_states = [&](std::ostream& to) {
        to << "state";
        for (int i = 1; i <= forms; ++i) to << ",u" << i;
        to << ",pi\n";
        for (std::size_t k = 0; k < model.size(); ++k) {
          to << k;
          for (auto u : model.state(k)) to << ',' << u;
          to << ',' << fb::format_real(solved.pi[k]) << '\n';
        }
      };
      if (model.size() <= kPrintStatesLimit) {
        write_states(out);
      } else {
        out << "(" << model.size() << " states; use --out to write them all)\n";
      }
      out << "form,expected_frequency\n";
      for (int i = 0; i < forms; ++i) {
        out << i + 1 << ',' << fb::format_real(p[static_cast<std::size_t>(i)]) << '\n';
      }
      if (forms == 2) {
        out << "closed_form_P," << fb::format_real(fb::expected_frequency_closed_form(L, nu[0]))
            << '\n';
      }
      out << "residual," << fb::format_real(fb::stationary_residual(model, solved.pi)) << '\n';
      if (!states_path.empty()) {
        Output file(states_path);
        write_states(file.stream());
        file.finish();
      }
      return 0;
    }

    if (boost_cmd->parsed()) {
      fb::ExperimentSpec spec;
      spec.figure = "boost-curve";
      spec.forms = forms;
      spec.capacities = resolve_capacities(capacity);
      for (double v : nu_grid) {
        const auto source = forms == 2 ? fb::SourceDistribution::two_forms(v)
                                       : fb::SourceDistribution::dominant_with_equal_split(forms, v);
        const auto probs = source.probabilities();
        spec.sources.emplace_back(probs.begin(), probs.end());
      }
      if (iterations) spec.iterations = *iterations;
      if (trials) spec.trials = *trials;
      spec.report_forms = {report_form - 1};
      spec.master_seed = seed;
      spec.threads = threads;
      spec.validate();
      Output out(out_path);
      fb::write_csv(out.stream(), forms, fb::run_experiment(spec));
      out.finish();
      return 0;
    }

    if (trajectory_cmd->parsed()) {
      fb::SimConfig config;
      config.forms = forms;
      config.capacity = resolve_capacities(capacity).front();
      config.source = make_source(forms, nu);
      config.iterations = iterations.value_or(1000);
      config.master_seed = seed;
      config.init = init_units.empty()
                        ? fb::default_initial_condition(forms, config.capacity)
                        : fb::InitialCondition::explicit_units(init_units);
      if (stride < 1) fb::fail(fb::ErrorCode::invalid_argument, "--stride must be >= 1");
      config.validate();
      const auto run = fb::run_trajectory(config, trial_index);
      Output out(out_path);
      auto& os = out.stream();
      os << "step";
      for (int i = 1; i <= forms; ++i) os << ",p" << i;
      os << '\n';
      for (std::size_t t = 0; t < run.steps(); t += static_cast<std::size_t>(stride)) {
        os << t;
        for (int i = 0; i < forms; ++i) os << ',' << fb::format_real(run.frequency(t, i));
        os << '\n';
      }
      out.finish();
      return 0;
    }

    if (converge_cmd->parsed()) {
      fb::ExperimentSpec spec;
      spec.figure = "converge";
      spec.kind = fb::ExperimentKind::convergence;
      spec.forms = forms;
      spec.capacities = resolve_capacities(capacity);
      const auto source = make_source(forms, nu);
      const auto probs = source.probabilities();
      spec.sources = {std::vector<double>(probs.begin(), probs.end())};
      spec.iterations = iterations.value_or(50'000);
      if (trials) spec.trials = *trials;
      spec.window = window;
      spec.eps = eps;
      spec.report_forms = {report_form - 1};
      spec.master_seed = seed;
      spec.threads = threads;
      spec.chain = chain;
      spec.validate();
      Output out(out_path);
      fb::write_csv(out.stream(), forms, fb::run_experiment(spec));
      out.finish();
      return 0;
    }

    if (experiment_cmd->parsed()) {
      auto spec = fb::figure_spec(figure);
      if (iterations) spec.iterations = *iterations;
      if (trials) spec.trials = *trials;
      spec.master_seed = seed;
      spec.threads = threads;
      spec.validate();
      Output out(out_path);
      fb::write_csv(out.stream(), spec.forms, fb::run_experiment(spec));
      out.finish();
      return 0;
    }

    if (fit_cmd->parsed()) {
      fit_options.threads = threads;
      fit_options.chain = chain;
      const auto observations = fb::load_observations(data_path);
      const auto result = fb::fit(observations, forms, fit_options);
      fb::PredictOptions predict_options;
      predict_options.chain = chain;
      predict_options.allow_estimate = false;
      const auto cases = fb::case_report(observations, forms, result.capacity,
                                         fit_options.parent1_weight, predict_options);
      Output out(out_path);
      fb::write_fit_report(out.stream(), result, cases);
      out.finish();
      if (!curve_path.empty()) {
        Output curve(curve_path);
        curve.stream() << "input,predicted\n";
        for (std::size_t k = 0; k < result.curve_x.size(); ++k) {
          curve.stream() << fb::format_real(result.curve_x[k]) << ','
                         << fb::format_real(result.curve_y[k]) << '\n';
        }
        curve.finish();
      }
      return 0;
    }
  } catch (const fb::Error& e) {
    std::cerr << "error: " << fb::to_string(e.code()) << ": " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
