#include "flowpat/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "flowpat/errors.hpp"
#include "flowpat/rng.hpp"

namespace flowpat {

std::string_view to_string(SplitProtocol p) {
  return p == SplitProtocol::ExperimentBased ? "experiment_based"
                                             : "pattern_based";
}

SplitProtocol parse_protocol(std::string_view name) {
  if (name == "experiment_based") return SplitProtocol::ExperimentBased;
  if (name == "pattern_based") return SplitProtocol::PatternBased;
  throw ConfigError("unknown split protocol: \"" + std::string(name) + "\"");
}

std::span<const double> window_at(const CapacitanceTrace& trace,
                                  std::size_t start, std::size_t window_len) {
  if (start + window_len > trace.size())
    throw ConfigError("window [" + std::to_string(start) + ", " +
                      std::to_string(start + window_len) +
                      ") overruns trace of length " +
                      std::to_string(trace.size()));
  return trace.view(start, window_len);
}

namespace {

struct Region {
  const Experiment* exp;
  std::size_t first_start;  // inclusive
  std::size_t last_start;   // inclusive
};

WindowSample cut(const Region& r, std::size_t start, std::size_t window_len) {
  auto s = window_at(r.exp->trace, start, window_len);
  WindowSample w;
  w.values.assign(s.begin(), s.end());
  w.label = r.exp->label;
  w.source_experiment = r.exp->id;
  w.start_index = start;
  return w;
}

// Draws `quota` windows uniformly (experiment, then start) with replacement.
std::size_t draw_windows(const std::vector<Region>& regions, std::size_t quota,
                         std::size_t window_len, Rng& rng,
                         std::vector<WindowSample>& out) {
  std::set<std::pair<const Experiment*, std::size_t>> seen;
  std::size_t duplicates = 0;
  for (std::size_t q = 0; q < quota; ++q) {
    const auto& r = regions[rng.uniform_below(regions.size())];
    const std::size_t start =
        r.first_start + rng.uniform_below(r.last_start - r.first_start + 1);
    if (!seen.insert({r.exp, start}).second) ++duplicates;
    out.push_back(cut(r, start, window_len));
  }
  return duplicates;
}

}  // namespace

DatasetSplit build_split(std::span<const Experiment> experiments,
                         SplitProtocol protocol, std::size_t train_per_pattern,
                         std::size_t eval_per_pattern, std::size_t window_len,
                         std::uint64_t seed) {
  if (window_len == 0) throw ConfigError("window_len must be positive");
  if (train_per_pattern == 0 || eval_per_pattern == 0)
    throw ConfigError("per-pattern quotas must be positive");

  std::unordered_map<int, std::vector<const Experiment*>> by_pattern;
  for (const auto& e : experiments)
    by_pattern[pattern_code(e.label)].push_back(&e);

  DatasetSplit split;
  split.protocol = protocol;
  split.seed = seed;
  split.window_len = window_len;
  split.train_per_pattern = train_per_pattern;
  split.eval_per_pattern = eval_per_pattern;
  split.train.reserve(static_cast<std::size_t>(kNumPatterns) * train_per_pattern);
  split.eval.reserve(static_cast<std::size_t>(kNumPatterns) * eval_per_pattern);

  for (FlowPattern p : all_patterns()) {
    auto it = by_pattern.find(pattern_code(p));
    if (it == by_pattern.end() || it->second.empty())
      throw DataError("coverage error: no experiments for pattern " +
                      std::string(to_string(p)));
    const auto& exps = it->second;
    Rng rng(derive_seed(seed, {0xD5u, static_cast<std::uint64_t>(pattern_code(p))}));

    std::vector<Region> train_regions, eval_regions;
    if (protocol == SplitProtocol::ExperimentBased) {
      for (const Experiment* e : exps) {
        const std::size_t len = e->trace.size();
        const auto boundary =
            static_cast<std::size_t>(std::floor(0.8 * static_cast<double>(len)));
        if (boundary < window_len)
          throw DataError("experiment " + e->id +
                          ": train region shorter than the window");
        if (len - boundary < window_len)
          throw DataError("experiment " + e->id +
                          ": eval region shorter than the window");
        // Train windows end at or before the boundary; eval windows start at
        // or after it.
        train_regions.push_back({e, 0, boundary - window_len});
        eval_regions.push_back({e, boundary, len - window_len});
      }
    } else {
      if (exps.size() < 2)
        throw ConfigError("protocol error: pattern " +
                          std::string(to_string(p)) +
                          " has a single experiment; cannot hold one out");
      const auto n_eval = static_cast<std::size_t>(
          std::ceil(0.2 * static_cast<double>(exps.size())));
      std::vector<std::size_t> order(exps.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      rng.shuffle(order);
      for (std::size_t i = 0; i < order.size(); ++i) {
        const Experiment* e = exps[order[i]];
        const std::size_t len = e->trace.size();
        if (len < window_len)
          throw DataError("experiment " + e->id + ": trace shorter than window");
        Region r{e, 0, len - window_len};
        if (i < n_eval) {
          eval_regions.push_back(r);
          split.eval_experiments.push_back(e->id);
        } else {
          train_regions.push_back(r);
        }
      }
    }

    split.duplicate_train_starts +=
        draw_windows(train_regions, train_per_pattern, window_len, rng,
                     split.train);
    split.duplicate_eval_starts +=
        draw_windows(eval_regions, eval_per_pattern, window_len, rng,
                     split.eval);
  }
  std::sort(split.eval_experiments.begin(), split.eval_experiments.end());
  return split;
}

void Standardization::apply(std::vector<WindowSample>& samples) const {
  for (auto& s : samples) {
    for (std::size_t j = 0; j < s.values.size(); ++j)
      s.values[j] = (s.values[j] - mean[j]) / stddev[j];
  }
}

void Standardization::apply(Matrix& m) const {
  for (std::size_t i = 0; i < m.rows; ++i) {
    double* r = m.row(i);
    for (std::size_t j = 0; j < m.cols; ++j)
      r[j] = (r[j] - mean[j]) / stddev[j];
  }
}

Standardization standardize(DatasetSplit& split) {
  if (split.train.empty())
    throw ConfigError("standardize: train partition is empty");
  const std::size_t d = split.window_len;
  Standardization st;
  st.mean.assign(d, 0.0);
  st.stddev.assign(d, 0.0);
  const double n = static_cast<double>(split.train.size());
  for (const auto& s : split.train)
    for (std::size_t j = 0; j < d; ++j) st.mean[j] += s.values[j];
  for (double& m : st.mean) m /= n;
  for (const auto& s : split.train)
    for (std::size_t j = 0; j < d; ++j) {
      const double c = s.values[j] - st.mean[j];
      st.stddev[j] += c * c;
    }
  for (double& v : st.stddev) v = std::max(std::sqrt(v / n), 1e-8);
  st.apply(split.train);
  st.apply(split.eval);
  return st;
}

Matrix to_matrix(std::span<const WindowSample> samples) {
  if (samples.empty()) return {};
  Matrix m(samples.size(), samples[0].values.size());
  for (std::size_t i = 0; i < samples.size(); ++i)
    std::copy(samples[i].values.begin(), samples[i].values.end(), m.row(i));
  return m;
}

std::vector<int> to_labels(std::span<const WindowSample> samples) {
  std::vector<int> out(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i)
    out[i] = pattern_code(samples[i].label);
  return out;
}

namespace {
std::string shortest(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}
}  // namespace

void write_partition_csv(std::span<const WindowSample> samples,
                         std::size_t window_len,
                         const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write partition CSV: " + path.string());
  out << "label,source_experiment,start_index";
  for (std::size_t j = 0; j < window_len; ++j) out << ",v" << j;
  out << '\n';
  std::ostringstream buf;
  for (const auto& s : samples) {
    buf << to_string(s.label) << ',' << s.source_experiment << ','
        << s.start_index;
    for (double v : s.values) buf << ',' << shortest(v);
    buf << '\n';
  }
  out << buf.str();
  if (!out) throw DataError("short write to " + path.string());
}

std::vector<WindowSample> read_partition_csv(const std::filesystem::path& path,
                                             std::size_t window_len) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open partition CSV: " + path.string());
  std::vector<WindowSample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;  // header
    WindowSample w;
    w.values.reserve(window_len);
    std::size_t field = 0;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      auto comma = line.find(',', pos);
      if (comma == std::string::npos) comma = line.size();
      std::string_view tok(line.data() + pos, comma - pos);
      if (field == 0) {
        w.label = parse_pattern(tok);
      } else if (field == 1) {
        w.source_experiment = std::string(tok);
      } else if (field == 2) {
        std::size_t v = 0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc{} || p != tok.data() + tok.size())
          throw DataError(path.string() + ":" + std::to_string(line_no) +
                          ": bad start_index");
        w.start_index = v;
      } else {
        double v = 0.0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc{} || p != tok.data() + tok.size())
          throw DataError(path.string() + ":" + std::to_string(line_no) +
                          ": bad voltage value");
        w.values.push_back(v);
      }
      ++field;
      pos = comma + 1;
    }
    if (w.values.size() != window_len)
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": expected " + std::to_string(window_len) +
                      " values, got " + std::to_string(w.values.size()));
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace flowpat
