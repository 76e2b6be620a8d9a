#include "freqboost/fit.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>

#include "freqboost/error.hpp"
#include "freqboost/experiments.hpp"

namespace freqboost {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

double parse_number(std::string_view text, std::string_view where) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || !std::isfinite(value)) {
    fail(ErrorCode::parse, std::string(where) + ": '" + std::string(text) + "' is not a number");
  }
  return value;
}

}  // namespace

ObservationSet::ObservationSet(std::vector<Observation> records) : records_(std::move(records)) {
  std::set<std::string, std::less<>> labels;
  for (const auto& r : records_) {
    if (r.label.empty()) fail(ErrorCode::invalid_argument, "observation with empty label");
    if (!labels.insert(r.label).second) {
      fail(ErrorCode::invalid_argument, "duplicate observation label '" + r.label + "'");
    }
    for (double v : {r.parent1, r.parent2, r.learner}) {
      if (!(v >= 0.0 && v <= 1.0)) {
        fail(ErrorCode::invalid_argument,
             "observation '" + r.label + "' has frequency " + format_real(v) + " outside [0,1]");
      }
    }
  }
}

const Observation& ObservationSet::find(std::string_view label) const {
  for (const auto& r : records_) {
    if (r.label == label) return r;
  }
  fail(ErrorCode::invalid_argument, "no observation labelled '" + std::string(label) + "'");
}

ObservationSet parse_observations(std::istream& in, std::string_view source_name) {
  const std::string name(source_name);
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::vector<Observation> records;

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    const std::string where = name + ":" + std::to_string(line_no);
    if (!have_header) {
      const std::vector<std::string_view> expected{"label", "category", "parent1", "parent2",
                                                   "simon"};
      if (fields != expected) {
        fail(ErrorCode::parse, where + ": expected header label,category,parent1,parent2,simon");
      }
      have_header = true;
      continue;
    }
    if (fields.size() != 5) {
      fail(ErrorCode::parse, where + ": expected 5 fields, found " + std::to_string(fields.size()));
    }
    if (fields[0].empty()) fail(ErrorCode::parse, where + ": empty label");
    records.push_back({std::string(fields[0]), std::string(fields[1]),
                       parse_number(fields[2], where), parse_number(fields[3], where),
                       parse_number(fields[4], where)});
  }
  if (!have_header) fail(ErrorCode::parse, name + ": missing header");

  bool percent = false;
  for (const auto& r : records) {
    percent = percent || r.parent1 > 1.5 || r.parent2 > 1.5 || r.learner > 1.5;
  }
  if (percent) {
    for (auto& r : records) {
      r.parent1 /= 100.0;
      r.parent2 /= 100.0;
      r.learner /= 100.0;
    }
  }
  for (const auto& r : records) {
    for (double v : {r.parent1, r.parent2, r.learner}) {
      if (!(v >= 0.0 && v <= 1.0)) {
        fail(ErrorCode::parse, name + ": record '" + r.label + "' has a frequency outside " +
                                   (percent ? "[0,100]%" : "[0,1]"));
      }
    }
  }
  try {
    return ObservationSet(std::move(records));
  } catch (const Error& e) {
    fail(ErrorCode::parse, name + ": " + e.what());
  }
}

ObservationSet load_observations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open " + path.string());
  return parse_observations(in, path.string());
}

Prediction predict(int forms, int capacity, double input, const PredictOptions& options) {
  if (forms < 2) fail(ErrorCode::invalid_argument, "M must be >= 2");
  if (capacity < 2) fail(ErrorCode::invalid_argument, "L must be >= 2");
  if (!(input >= 0.0 && input <= 1.0)) {
    fail(ErrorCode::invalid_argument, "input frequency must lie in [0,1]");
  }
  if (forms == 2) return {expected_frequency_closed_form(capacity, input), false};
  const auto source = SourceDistribution::dominant_with_equal_split(forms, input);
  const auto target = resolve_expected_frequency(forms, capacity, source, 0, options.seed,
                                                 options.allow_estimate, options.chain);
  return {target.value, target.estimated};
}

FitResult fit(const ObservationSet& observations, int forms, const FitOptions& options) {
  if (observations.empty()) fail(ErrorCode::invalid_argument, "cannot fit an empty observation set");
  if (options.min_capacity < 2 || options.max_capacity < options.min_capacity) {
    fail(ErrorCode::invalid_argument, "bad L grid");
  }
  if (!(options.parent1_weight >= 0.0 && options.parent1_weight <= 1.0)) {
    fail(ErrorCode::invalid_argument, "parent weight must lie in [0,1]");
  }
  if (forms >= 3 && lattice_size(forms, options.max_capacity) > options.chain.max_states) {
    fail(ErrorCode::state_space_too_large,
         "L grid reaches " + std::to_string(options.max_capacity) + ", whose M=" +
             std::to_string(forms) + " lattice exceeds the state cap");
  }

  PredictOptions predict_options;
  predict_options.chain = options.chain;
  predict_options.allow_estimate = false;

  std::vector<double> inputs;
  for (const auto& r : observations.records()) inputs.push_back(r.input(options.parent1_weight));

  const auto grid = static_cast<std::int64_t>(options.max_capacity - options.min_capacity + 1);
  std::vector<double> sse(static_cast<std::size_t>(grid), 0.0);
  parallel_for(grid, options.threads, [&](std::int64_t k, unsigned) {
    const int capacity = options.min_capacity + static_cast<int>(k);
    double total = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const double r =
          predict(forms, capacity, inputs[i], predict_options).value -
          observations.records()[i].learner;
      total += r * r;
    }
    sse[static_cast<std::size_t>(k)] = total;
  });

  // Strict '<' while scanning upward keeps the smallest L among ties.
  std::size_t best = 0;
  for (std::size_t k = 1; k < sse.size(); ++k) {
    if (sse[k] < sse[best]) best = k;
  }

  FitResult result;
  result.forms = forms;
  result.capacity = options.min_capacity + static_cast<int>(best);
  result.increment = 1.0 / result.capacity;
  result.sse = sse[best];
  result.inputs = inputs;
  for (double x : inputs) {
    result.predicted.push_back(predict(forms, result.capacity, x, predict_options).value);
  }
  const int points = std::max(options.curve_points, 0);
  result.curve_x.resize(static_cast<std::size_t>(points));
  result.curve_y.resize(static_cast<std::size_t>(points));
  parallel_for(points, options.threads, [&](std::int64_t k, unsigned) {
    const double x = points == 1 ? 0.0 : static_cast<double>(k) / (points - 1);
    result.curve_x[static_cast<std::size_t>(k)] = x;
    result.curve_y[static_cast<std::size_t>(k)] =
        predict(forms, result.capacity, x, predict_options).value;
  });
  return result;
}

std::string_view to_string(BoostClass c) noexcept {
  switch (c) {
    case BoostClass::majority_form: return "majority-form boosting";
    case BoostClass::sub_majority: return "sub-majority boosting (requires M ≥ 3)";
    case BoostClass::below_uniform: return "dominant-form below 1/M";
  }
  return "";
}

BoostClass classify_input(double input, int forms) noexcept {
  if (input > 0.5) return BoostClass::majority_form;
  if (input > 1.0 / forms) return BoostClass::sub_majority;
  return BoostClass::below_uniform;
}

std::vector<CaseRecord> case_report(const ObservationSet& observations, int forms, int capacity,
                                    double parent1_weight, const PredictOptions& options) {
  std::vector<CaseRecord> out;
  for (const auto& r : observations.records()) {
    CaseRecord c;
    c.label = r.label;
    c.input = r.input(parent1_weight);
    c.observed = r.learner;
    const auto p = predict(forms, capacity, c.input, options);
    c.predicted = p.value;
    c.estimated = p.estimated;
    c.residual = c.observed - c.predicted;
    c.classification = classify_input(c.input, forms);
    out.push_back(std::move(c));
  }
  return out;
}

void write_fit_report(std::ostream& out, const FitResult& fit, std::span<const CaseRecord> cases) {
  out << "M,L_fit,s_fit,sse\n";
  out << fit.forms << ',' << fit.capacity << ',' << format_real(fit.increment) << ','
      << format_real(fit.sse) << '\n';
  out << "label,input,observed,predicted,residual,classification\n";
  for (const auto& c : cases) {
    out << c.label << ',' << format_real(c.input) << ',' << format_real(c.observed) << ','
        << format_real(c.predicted) << ',' << format_real(c.residual) << ','
        << to_string(c.classification) << '\n';
  }
  if (!out) fail(ErrorCode::io, "failed writing fit report");
}

}  // namespace freqboost
