#include "rducb/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "rducb/trace_io.hpp"

namespace rducb {

namespace {

using nlohmann::json;

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t end = s.find(sep, pos);
    out.push_back(trim(s.substr(pos, end == std::string_view::npos ? end : end - pos)));
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return out;
}

bool parse_bool(std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorCode::kParseError, "expected true or false, got '" + std::string(v) + "'");
}

Bounds parse_interval(std::string_view v) {
  const auto parts = split(v, ':');
  if (parts.size() != 2) {
    throw Error(ErrorCode::kParseError, "expected lo:hi, got '" + std::string(v) + "'");
  }
  return {parse_double(parts[0]), parse_double(parts[1])};
}

std::string interval_text(const Bounds& b) {
  return format_double(b.lo) + ":" + format_double(b.hi);
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

void check_run(const RunConfig& c) {
  if (c.benchmark != "external") make_benchmark(c.benchmark, c.dim);
  validate(c);
}

}  // namespace

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
  text = trim(text);
  std::vector<std::uint64_t> seeds;
  if (const auto dots = text.find(".."); dots != std::string_view::npos) {
    const std::uint64_t a = parse_size(trim(text.substr(0, dots)));
    const std::uint64_t b = parse_size(trim(text.substr(dots + 2)));
    if (b < a) throw Error(ErrorCode::kParseError, "empty seed range '" + std::string(text) + "'");
    for (std::uint64_t s = a; s <= b; ++s) seeds.push_back(s);
  } else {
    for (auto part : split(text, ',')) seeds.push_back(parse_size(part));
  }
  return seeds;
}

bool apply_run_key(RunConfig& c, std::string_view key, std::string_view value) {
  const std::string_view v = trim(value);
  if (key == "benchmark") {
    c.benchmark = std::string(v);
  } else if (key == "dim") {
    c.dim = parse_size(v);
  } else if (key == "budget") {
    c.budget = parse_size(v);
  } else if (key == "init_budget") {
    c.init_budget = parse_size(v);
  } else if (key == "edges") {
    if (v == "auto") {
      c.edges.reset();
    } else {
      c.edges = parse_size(v);
    }
  } else if (key == "strategy") {
    c.strategy = parse_strategy(v);
  } else if (key == "acquisition") {
    c.acquisition = parse_acquisition_family(v);
  } else if (key == "beta") {
    if (v == "schedule") {
      c.beta.reset();
    } else {
      c.beta = parse_double(v);
    }
  } else if (key == "grid_size") {
    c.grid_size = parse_size(v);
  } else if (key == "refine") {
    c.refine = parse_bool(v);
  } else if (key == "memory_cap_mb") {
    c.memory_cap_mb = parse_double(v);
  } else if (key == "fit_restarts") {
    c.fit_restarts = parse_size(v);
  } else if (key == "fit_max_steps") {
    c.fit_max_steps = parse_size(v);
  } else if (key == "init_region") {
    c.init_region.clear();
    if (v != "full") {
      for (auto part : split(v, ',')) c.init_region.push_back(parse_interval(part));
    }
  } else if (key == "learn_interval") {
    c.learn_interval = parse_size(v);
  } else if (key == "proposals") {
    c.structure_proposals = parse_size(v);
  } else if (key == "command") {
    c.command = std::string(v);
  } else if (key == "domain") {
    c.domain.clear();
    if (v.empty()) return true;
    for (auto part : split(v, ',')) {
      DomainEntry e;
      if (part.find('|') != std::string_view::npos) {
        for (auto item : split(part, '|')) e.values.push_back(parse_double(item));
        e.bounds = {*std::min_element(e.values.begin(), e.values.end()),
                    *std::max_element(e.values.begin(), e.values.end())};
      } else {
        e.bounds = parse_interval(part);
      }
      c.domain.push_back(std::move(e));
    }
    c.dim = c.domain.size();
  } else if (key == "sense") {
    c.sense = parse_sense(v);
  } else if (key == "timeout_s") {
    c.timeout_s = parse_double(v);
  } else if (key == "record_wall_time") {
    c.record_wall_time = parse_bool(v);
  } else {
    return false;
  }
  return true;
}

std::vector<std::pair<std::string, std::string>> run_keys(const RunConfig& c) {
  std::vector<std::string> region;
  for (const auto& b : c.init_region) region.push_back(interval_text(b));
  std::vector<std::string> domain;
  for (const auto& e : c.domain) {
    if (e.values.empty()) {
      domain.push_back(interval_text(e.bounds));
    } else {
      std::vector<std::string> vals;
      for (double v : e.values) vals.push_back(format_double(v));
      domain.push_back(join(vals, "|"));
    }
  }
  const std::size_t d = c.benchmark == "external" ? c.domain.size() : c.dim;
  return {
      {"benchmark", c.benchmark},
      {"dim", std::to_string(d)},
      {"budget", std::to_string(c.budget)},
      {"init_budget", std::to_string(c.init_budget)},
      {"edges", c.edges ? std::to_string(*c.edges) : "auto"},
      {"resolved_edges", std::to_string(resolved_edges(c, d))},
      {"strategy", std::string(to_string(c.strategy))},
      {"acquisition", std::string(to_string(c.acquisition))},
      {"beta", c.beta ? format_double(*c.beta) : "schedule"},
      {"grid_size", std::to_string(c.grid_size)},
      {"refine", c.refine ? "true" : "false"},
      {"memory_cap_mb", format_double(c.memory_cap_mb)},
      {"fit_restarts", std::to_string(c.fit_restarts)},
      {"fit_max_steps", std::to_string(c.fit_max_steps)},
      {"init_region", region.empty() ? "full" : join(region, ",")},
      {"learn_interval", std::to_string(c.learn_interval)},
      {"proposals", std::to_string(c.structure_proposals)},
      {"command", c.command},
      {"domain", join(domain, ",")},
      {"sense", std::string(to_string(c.sense))},
      {"timeout_s", format_double(c.timeout_s)},
      {"record_wall_time", c.record_wall_time ? "true" : "false"},
  };
}

ExperimentFile parse_experiment(std::string_view text) {
  ExperimentFile exp;
  std::vector<std::pair<RunConfig, std::size_t>> runs;  // config, header line
  std::vector<std::pair<std::string, std::string>> default_keys;
  std::vector<std::vector<std::pair<std::string, std::string>>> run_sets;

  std::size_t lineno = 0;
  std::size_t pos = 0;
  auto fail = [&](const std::string& what) -> void {
    throw Error(ErrorCode::kParseError, "line " + std::to_string(lineno) + ": " + what);
  };
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      const auto inner = trim(line.substr(1, line.size() - 2));
      if (inner.substr(0, 4) != "run " || trim(inner.substr(4)).empty()) {
        fail("expected [run NAME], got '" + std::string(line) + "'");
      }
      RunConfig c;
      c.name = std::string(trim(inner.substr(4)));
      for (const auto& r : runs) {
        if (r.first.name == c.name) fail("duplicate run '" + c.name + "'");
      }
      runs.emplace_back(c, lineno);
      run_sets.emplace_back();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail("expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    try {
      if (runs.empty() && key == "version") {
        exp.version = static_cast<int>(parse_size(value));
        if (exp.version != kConfigFormatVersion) {
          fail("unsupported version " + value + " (expected " +
               std::to_string(kConfigFormatVersion) + ")");
        }
      } else if (runs.empty() && key == "output_dir") {
        exp.output_dir = value;
      } else if (runs.empty() && key == "seeds") {
        exp.seeds = parse_seed_list(value);
      } else {
        RunConfig probe;
        if (!apply_run_key(probe, key, value)) fail("unknown key '" + key + "'");
        if (runs.empty()) {
          default_keys.emplace_back(key, value);
        } else {
          run_sets.back().emplace_back(key, value);
        }
      }
    } catch (const Error& e) {
      if (std::string_view(e.what()).starts_with("line ")) throw;
      fail("key '" + key + "': " + e.what());
    }
    if (end == text.size()) break;
  }
  if (runs.empty()) {
    throw Error(ErrorCode::kParseError, "no [run NAME] section");
  }
  for (std::size_t i = 0; i < runs.size(); ++i) {
    RunConfig c;
    c.name = runs[i].first.name;
    for (const auto& [k, v] : default_keys) apply_run_key(c, k, v);
    for (const auto& [k, v] : run_sets[i]) apply_run_key(c, k, v);
    try {
      check_run(c);
    } catch (const Error& e) {
      throw Error(ErrorCode::kParseError, "line " + std::to_string(runs[i].second) +
                                              ": run '" + c.name + "': " + e.what());
    }
    exp.runs.push_back(std::move(c));
  }
  return exp;
}

ExperimentFile load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kParseError, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  if (path.extension() == ".json") return parse_manifest(text);
  return parse_experiment(text);
}

bool RunOutcome::ok() const {
  return std::all_of(seeds.begin(), seeds.end(), [](const auto& s) { return s.ok; });
}

bool ExperimentOutcome::ok() const {
  return std::all_of(runs.begin(), runs.end(), [](const auto& r) { return r.ok(); });
}

std::string manifest_json(const ExperimentFile& exp, const ExperimentOutcome& outcome) {
  json m;
  m["format"] = "rducb-manifest";
  m["config_format_version"] = exp.version;
  m["software_version"] = std::string(kSoftwareVersion);
  m["output_dir"] = exp.output_dir;
  m["seeds"] = exp.seeds;
  m["status"] = outcome.ok() ? "ok" : "failed";
  json runs = json::array();
  for (std::size_t i = 0; i < exp.runs.size(); ++i) {
    json r;
    r["name"] = exp.runs[i].name;
    json cfg = json::object();
    for (const auto& [k, v] : run_keys(exp.runs[i])) cfg[k] = v;
    r["config"] = cfg;
    json seeds = json::array();
    bool ok = true;
    if (i < outcome.runs.size()) {
      for (const auto& s : outcome.runs[i].seeds) {
        json js;
        js["seed"] = s.seed;
        js["status"] = s.ok ? "ok" : "failed";
        js["rounds"] = s.rounds;
        js["trace"] = exp.runs[i].name + "/trace_seed" + std::to_string(s.seed) + ".csv";
        if (!s.ok) {
          js["error"] = s.error;
          js["failed_round"] = s.failed_round;
        }
        ok = ok && s.ok;
        seeds.push_back(js);
      }
    }
    r["status"] = ok ? "ok" : "failed";
    r["summary"] = exp.runs[i].name + "/summary.csv";
    r["results"] = seeds;
    runs.push_back(r);
  }
  m["runs"] = runs;
  return m.dump(2) + "\n";
}

ExperimentFile parse_manifest(std::string_view json_text) {
  ExperimentFile exp;
  try {
    const json m = json::parse(json_text);
    exp.version = m.at("config_format_version").get<int>();
    if (exp.version != kConfigFormatVersion) {
      throw Error(ErrorCode::kParseError, "unsupported config format version");
    }
    exp.output_dir = m.at("output_dir").get<std::string>();
    exp.seeds = m.at("seeds").get<std::vector<std::uint64_t>>();
    for (const auto& r : m.at("runs")) {
      RunConfig c;
      c.name = r.at("name").get<std::string>();
      for (const auto& [k, v] : r.at("config").items()) {
        if (k == "resolved_edges") continue;
        if (!apply_run_key(c, k, v.get<std::string>())) {
          throw Error(ErrorCode::kParseError, "manifest: unknown key '" + k + "'");
        }
      }
      check_run(c);
      exp.runs.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("manifest: ") + e.what());
  }
  return exp;
}

ExperimentOutcome run_experiment(const ExperimentFile& exp, std::size_t jobs) {
  namespace fs = std::filesystem;
  const fs::path out_dir(exp.output_dir);
  struct Task {
    std::size_t run;
    std::size_t seed_index;
  };
  std::vector<Task> tasks;
  ExperimentOutcome outcome;
  std::vector<std::vector<RegretTrace>> traces(exp.runs.size());
  for (std::size_t i = 0; i < exp.runs.size(); ++i) {
    fs::create_directories(out_dir / exp.runs[i].name);
    RunOutcome ro;
    ro.name = exp.runs[i].name;
    ro.seeds.resize(exp.seeds.size());
    traces[i].resize(exp.seeds.size());
    outcome.runs.push_back(std::move(ro));
    for (std::size_t k = 0; k < exp.seeds.size(); ++k) tasks.push_back({i, k});
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t n = next++; n < tasks.size(); n = next++) {
      const Task task = tasks[n];
      RunConfig config = exp.runs[task.run];
      config.seed = exp.seeds[task.seed_index];
      SeedOutcome& so = outcome.runs[task.run].seeds[task.seed_index];
      so.seed = config.seed;
      RegretTrace trace;
      try {
        trace = run_strategy(config);
        so.ok = true;
      } catch (const RunError& e) {
        trace = e.partial();
        so.error = std::string(to_string(e.code())) + ": " + e.what();
        so.failed_round = e.failed_round();
      } catch (const std::exception& e) {
        trace.seed = config.seed;
        so.error = e.what();
      }
      so.rounds = trace.rows.size();
      const fs::path file =
          out_dir / config.name / ("trace_seed" + std::to_string(config.seed) + ".csv");
      std::ofstream f(file, std::ios::binary);
      write_trace(f, trace);
      if (!f) {
        so.ok = false;
        so.error = "cannot write " + file.string();
      }
      traces[task.run][task.seed_index] = std::move(trace);
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(jobs, tasks.size()));
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < n_threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (std::size_t i = 0; i < exp.runs.size(); ++i) {
    std::vector<RegretTrace> done;
    for (std::size_t k = 0; k < exp.seeds.size(); ++k) {
      if (outcome.runs[i].seeds[k].ok) done.push_back(traces[i][k]);
    }
    if (done.empty()) continue;
    std::ofstream f(out_dir / exp.runs[i].name / "summary.csv", std::ios::binary);
    write_summary(f, aggregate(done));
  }
  outcome.manifest = out_dir / "manifest.json";
  std::ofstream mf(outcome.manifest, std::ios::binary);
  mf << manifest_json(exp, outcome);
  return outcome;
}

}  // namespace rducb
