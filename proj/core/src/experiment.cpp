#include "cgmc/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cgmc/rng.hpp"
#include "cgmc/stats.hpp"

#include "json.hpp"

namespace cgmc {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream stream(s);
  while (std::getline(stream, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

ModelSpec ExperimentConfig::model() const {
  std::optional<LongRangeModel> lr;
  if (kernel != "none") {
    lr = LongRangeModel::create(kernel_shape_from_string(kernel), range);
  }
  return ModelSpec::validated({coupling}, lr, beta);
}

LatticeGeometry ExperimentConfig::geometry() const {
  return LatticeGeometry::create(n_sites, cell_size);
}

ChainConfig ExperimentConfig::chain() const {
  ChainConfig cfg;
  cfg.steps = steps;
  cfg.burn_in = burn_in;
  cfg.thin = thin;
  cfg.seed = seed;
  cfg.observables.clear();
  for (const auto& name : split_list(observables, ',')) {
    cfg.observables.push_back(observable_from_string(name));
  }
  if (cfg.observables.empty()) {
    throw ConfigError("chain.observables must name at least one observable");
  }
  return cfg;
}

CapacityPolicy ExperimentConfig::caps() const {
  CapacityPolicy caps;
  caps.accept_large = accept_large;
  return caps;
}

ReconstructionPlan ExperimentConfig::reconstruction_plan() const {
  if (exactness == "auto") return ReconstructionPlan::pick_default(cell_size);
  ReconstructionPlan plan;
  if (exactness == "exact") {
    plan.exactness = ReconstructionPlan::Exactness::ExactEnumeration;
  } else if (exactness == "mc") {
    plan.exactness = ReconstructionPlan::Exactness::Mcmc;
  } else {
    throw ConfigError("reconstruct.exactness must be auto, exact or mc");
  }
  return plan;
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::echo() const {
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("model.K", fmt17(coupling));
  kv.emplace_back("model.beta", fmt17(beta));
  kv.emplace_back("model.kernel", kernel);
  kv.emplace_back("model.L", std::to_string(range));
  kv.emplace_back("geometry.N", std::to_string(n_sites));
  kv.emplace_back("geometry.q", std::to_string(cell_size));
  kv.emplace_back("chain.steps", std::to_string(steps));
  kv.emplace_back("chain.burn_in", std::to_string(burn_in));
  kv.emplace_back("chain.thin", std::to_string(thin));
  kv.emplace_back("chain.seed", std::to_string(seed));
  kv.emplace_back("chain.observables", observables);
  kv.emplace_back("phi.mode", phi_mode);
  kv.emplace_back("phi.steps", std::to_string(phi_steps));
  kv.emplace_back("phi.burn_in", std::to_string(phi_burn_in));
  kv.emplace_back("phi.seed", std::to_string(phi_seed));
  kv.emplace_back("phi.table", phi_table);
  kv.emplace_back("reconstruct.draws", std::to_string(draws));
  kv.emplace_back("reconstruct.exactness", exactness);
  kv.emplace_back("output.directory", directory);
  kv.emplace_back("output.formats", formats);
  kv.emplace_back("accept_large", accept_large ? "true" : "false");
  if (window) {
    kv.emplace_back("window",
                    std::to_string(window->first) + ".." + std::to_string(window->second));
  }
  return kv;
}

namespace {

void set_config_key(ExperimentConfig& config, const std::string& section, const std::string& key,
                    const std::string& value, const std::string& where) {
  try {
    const std::string full = section + "." + key;
    if (full == "model.K") config.coupling = std::stod(value);
    else if (full == "model.beta") config.beta = std::stod(value);
    else if (full == "model.kernel") config.kernel = value;
    else if (full == "model.L") config.range = std::stoi(value);
    else if (full == "geometry.N") config.n_sites = std::stoi(value);
    else if (full == "geometry.q") config.cell_size = std::stoi(value);
    else if (full == "chain.steps") config.steps = std::stoull(value);
    else if (full == "chain.burn_in") config.burn_in = std::stoull(value);
    else if (full == "chain.thin") config.thin = std::stoull(value);
    else if (full == "chain.seed") config.seed = std::stoull(value);
    else if (full == "chain.observables") config.observables = value;
    else if (full == "phi.mode") config.phi_mode = value;
    else if (full == "phi.steps") config.phi_steps = std::stoull(value);
    else if (full == "phi.burn_in") config.phi_burn_in = std::stoull(value);
    else if (full == "phi.seed") config.phi_seed = std::stoull(value);
    else if (full == "phi.table") config.phi_table = value;
    else if (full == "reconstruct.draws") config.draws = std::stoull(value);
    else if (full == "reconstruct.exactness") config.exactness = value;
    else if (full == "output.directory") config.directory = value;
    else if (full == "output.formats") config.formats = value;
    else throw ConfigError("unknown configuration key '" + full + "' at " + where);
  } catch (const std::invalid_argument&) {
    throw ConfigError("cannot parse value '" + value + "' for " + section + "." + key + " at " +
                      where);
  } catch (const std::out_of_range&) {
    throw ConfigError("value '" + value + "' out of range for " + section + "." + key + " at " +
                      where);
  }
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig config;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') {
        throw ConfigError("malformed section header at line " + std::to_string(line_number));
      }
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("expected key = value at line " + std::to_string(line_number));
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (section.empty()) {
      throw ConfigError("key '" + key + "' outside any section at line " +
                        std::to_string(line_number));
    }
    set_config_key(config, section, key, value, "line " + std::to_string(line_number));
  }
  return config;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

void apply_override(ExperimentConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("override '" + assignment + "' is not of the form section.key=value");
  }
  const std::string key = trim(assignment.substr(0, eq));
  const std::string value = trim(assignment.substr(eq + 1));
  const auto dot = key.find('.');
  if (dot == std::string::npos) {
    throw ConfigError("override key '" + key + "' must be section.key");
  }
  set_config_key(config, key.substr(0, dot), key.substr(dot + 1), value,
                 "override '" + assignment + "'");
}

// ---------------------------------------------------------------------------
// validation suite
// ---------------------------------------------------------------------------

namespace {

struct CheckRecorder {
  std::vector<ValidationCheck> checks;

  void record(const std::string& name, double measured, double tolerance) {
    checks.push_back({name, measured, tolerance, measured <= tolerance});
  }

  void run(const std::string& name, double tolerance, const std::function<double()>& body) {
    double measured = std::numeric_limits<double>::quiet_NaN();
    bool threw = false;
    try {
      measured = body();
    } catch (const std::exception& e) {
      threw = true;
      checks.push_back({name + " (threw: " + e.what() + ")", measured, tolerance, false});
    }
    if (!threw) checks.push_back({name, measured, tolerance, measured <= tolerance});
  }
};

ModelSpec make_model(double coupling, double beta, std::optional<LongRangeModel> lr = {}) {
  return ModelSpec::validated({coupling}, std::move(lr), beta);
}

double conditional_mean_h_long(const CoarseConfiguration& eta, const ModelSpec& model,
                               const LatticeGeometry& geo, const CapacityPolicy& caps) {
  KahanSum sum;
  std::uint64_t count = 0;
  oracle::for_each_conditional_config(
      eta, geo,
      [&](const SpinConfiguration& s) {
        sum.add(h_long(s, model, geo));
        ++count;
      },
      caps);
  return sum.value() / static_cast<double>(count);
}

}  // namespace

ValidationReport run_validation_suite(const ValidationHooks& hooks) {
  const CapacityPolicy caps;
  const auto h_cg_long_fn =
      hooks.h_cg_long_fn
          ? hooks.h_cg_long_fn
          : [](const CoarseConfiguration& eta, const CoarseLongRangeKernel& kernel,
               const LatticeGeometry& geo) { return h_cg_long(eta, kernel, geo); };

  CheckRecorder rec;

  rec.run("prior-normalization", 1e-12, [&] {
    double worst = 0.0;
    for (int q : {2, 3, 4, 7}) {
      KahanSum sum;
      for (int eta = -q; eta <= q; eta += 2) sum.add(std::exp(cell_log_prior(q, eta)));
      worst = std::max(worst, std::abs(sum.value() - 1.0));
    }
    return worst;
  });

  rec.run("preimage-counting", 1e-9, [&] {
    double worst = 0.0;
    for (const auto& [n, q] : std::vector<std::pair<int, int>>{{8, 2}, {12, 3}}) {
      const auto geo = LatticeGeometry::create(n, q);
      std::vector<std::uint64_t> histogram(coarse_state_count(geo), 0);
      for_each_spin_config(
          n, [&](const SpinConfiguration& s) { ++histogram[coarse_index(coarse_map(s, geo), geo)]; },
          caps);
      for_each_coarse_config(geo, [&](const CoarseConfiguration& eta) {
        double expected = 1.0;
        for (int k = 0; k < geo.n_cells; ++k) {
          expected *= static_cast<double>(cell_config_count(q, eta[k]));
        }
        const auto i = coarse_index(eta, geo);
        worst = std::max(worst, std::abs(static_cast<double>(histogram[i]) - expected));
        // prior weight must equal the preimage fraction
        const double prior = std::exp(coarse_prior_log_weight(eta, geo));
        worst = std::max(worst,
                         std::abs(prior - expected / std::pow(2.0, static_cast<double>(n))));
      });
    }
    return worst;
  });

  rec.run("short-range-decomposition", 1e-12, [&] {
    const auto geo = LatticeGeometry::create(12, 3);
    const auto model = make_model(0.7, 1.0);
    CounterRng rng(20240811, 5);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
      SpinConfiguration s;
      s.spins.resize(static_cast<std::size_t>(geo.n_sites));
      for (auto& v : s.spins) v = static_cast<Spin>(rng.spin());
      KahanSum parts;
      for (int k = 0; k < geo.n_cells; ++k) {
        parts.add(cell_energy(s, k, model, geo));
        parts.add(interface_energy(s, k, model, geo));
      }
      worst = std::max(worst, std::abs(parts.value() - h_short(s, model, geo)));
    }
    return worst;
  });

  rec.run("partition-identity", 1e-10, [&] {
    double worst = 0.0;
    for (double coupling : {0.0, 0.5}) {
      for (bool with_kernel : {false, true}) {
        const auto geo = LatticeGeometry::create(8, 2);
        std::optional<LongRangeModel> lr;
        if (with_kernel) lr = LongRangeModel::create(KernelShape::Triangular, 4);
        const auto model = make_model(coupling, 1.0, lr);
        worst = std::max(worst,
                         oracle::exact_partition_identity_check(model, geo, caps).relative_gap);
      }
    }
    return worst;
  });

  rec.run("partition-identity-flat-kernel-split", 1e-10, [&] {
    // a full-range constant kernel makes the long-range energy a function of
    // the block sums alone, so the exact coarse Hamiltonian splits into the
    // averaged kernel part plus the short-range-only coarse Hamiltonian
    const auto geo = LatticeGeometry::create(8, 2);
    const auto model = make_model(0.3, 1.0, LongRangeModel::create(KernelShape::Constant, 4));
    const auto short_only = make_model(0.3, 1.0);
    const auto kernel = build_coarse_kernel(model, geo);
    const auto short_table = oracle::exact_cg_table(short_only, geo, caps);

    LogSumExp micro;
    for_each_spin_config(
        geo.n_sites,
        [&](const SpinConfiguration& s) { micro.add(-model.beta * h_total(s, model, geo)); },
        caps);
    const double log_z_micro = micro.value() - geo.n_sites * std::log(2.0);

    LogSumExp coarse;
    for_each_coarse_config(geo, [&](const CoarseConfiguration& eta) {
      const double h_split =
          h_cg_long_fn(eta, kernel, geo) + short_table[coarse_index(eta, geo)];
      coarse.add(coarse_prior_log_weight(eta, geo) - model.beta * h_split);
    });
    return std::abs(std::exp(coarse.value() - log_z_micro) - 1.0);
  });

  rec.run("long-range-conditional-mean", 1e-12, [&] {
    const auto geo = LatticeGeometry::create(12, 3);
    const auto model = make_model(0.3, 1.0, LongRangeModel::create(KernelShape::Triangular, 4));
    const auto kernel = build_coarse_kernel(model, geo);
    double worst = 0.0;
    for_each_coarse_config(geo, [&](const CoarseConfiguration& eta) {
      const double mean = conditional_mean_h_long(eta, model, geo, caps);
      worst = std::max(worst, std::abs(mean - h_cg_long_fn(eta, kernel, geo)));
    });
    return worst;
  });

  rec.run("three-body-closed-form", 1e-10, [&] {
    double worst = 0.0;
    for (int q : {2, 3}) {
      const auto model = make_model(0.5, 1.0);
      const auto tables = phi_tables_exact(q, 0.5, 1.0, caps);
      const double lambda = std::tanh(0.5);
      const double a = std::cosh(0.5);
      for (int el = -q; el <= q; el += 2) {
        for (int em = -q; em <= q; em += 2) {
          for (int er = -q; er <= q; er += 2) {
            const double closed = three_body_potential(el, em, er, tables, lambda, a, 1.0);
            const double z3 = oracle::three_cell_partition_function(el, em, er, model, q, caps);
            const double direct =
                -(std::log(z3) -
                  std::log(oracle::cell_partition_function(el, {}, model, q, caps)) -
                  std::log(oracle::cell_partition_function(em, {}, model, q, caps)) -
                  std::log(oracle::cell_partition_function(er, {}, model, q, caps)));
            worst = std::max(worst, std::abs(closed - direct));
          }
        }
      }
    }
    return worst;
  });

  rec.run("f-short-closed-form", 1e-10, [&] {
    double worst = 0.0;
    for (int q : {2, 3, 4}) {
      for (double coupling : {0.5, 1.0}) {
        const auto model = make_model(coupling, 1.0);
        const auto tables = phi_tables_exact(q, coupling, 1.0, caps);
        const double lambda = std::tanh(coupling);
        for (int eta = -q; eta <= q; eta += 2) {
          const auto& e = tables.at(eta);
          for (int sl : {-1, +1}) {
            for (int sr : {-1, +1}) {
              const double closed = lambda * lambda * sl * sr * (e.phi2 - e.phi1 * e.phi1) /
                                    ((1.0 - lambda * sl * e.phi1) * (1.0 - lambda * sr * e.phi1));
              worst = std::max(
                  worst, std::abs(closed - oracle::f_short(eta, sl, sr, model, q, caps)));
            }
          }
        }
      }
    }
    return worst;
  });

  rec.run("f-short-vanishes-at-zero-coupling", 1e-14, [&] {
    const auto model = make_model(0.0, 1.0);
    double worst = 0.0;
    for (int eta = -4; eta <= 4; eta += 2) {
      for (int sl : {-1, +1}) {
        for (int sr : {-1, +1}) {
          worst = std::max(worst, std::abs(oracle::f_short(eta, sl, sr, model, 4, caps)));
        }
      }
    }
    return worst;
  });

  rec.run("phi-high-temperature", 1e-12, [&] {
    const int q = 5;
    const auto tables = phi_tables_exact(q, 0.0, 1.0, caps);
    double worst = 0.0;
    for (int eta = -q; eta <= q; eta += 2) {
      const auto& e = tables.at(eta);
      worst = std::max(worst, std::abs(e.phi1 - static_cast<double>(eta) / q));
      worst = std::max(worst, std::abs(e.phi2 - (static_cast<double>(eta) * eta - q) /
                                                    (static_cast<double>(q) * (q - 1))));
    }
    return worst;
  });

  rec.run("three-cell-assembly", 1e-10, [&] {
    const auto geo = LatticeGeometry::create(8, 2);
    const auto model = make_model(0.3, 1.0, LongRangeModel::create(KernelShape::Triangular, 3));
    const auto cgh = CoarseHamiltonian::build_exact(model, geo, caps);
    double worst = 0.0;
    for_each_coarse_config(geo, [&](const CoarseConfiguration& eta) {
      worst = std::max(worst, std::abs(h_cg0(eta, cgh, geo) -
                                       h_cg0_via_three_cell(eta, model, geo, caps)));
    });
    return worst;
  });

  rec.run("block-update-consistency", 1e-10, [&] {
    const auto geo = LatticeGeometry::create(16, 2);
    const auto model = make_model(0.4, 1.0, LongRangeModel::create(KernelShape::Triangular, 4));
    const auto cgh = CoarseHamiltonian::build_exact(model, geo, caps);
    CounterRng rng(77, 9);
    CoarseConfiguration eta;
    eta.blocks.assign(static_cast<std::size_t>(geo.n_cells), 0);
    double worst = 0.0;
    double current = h_cg0(eta, cgh, geo);
    for (int trial = 0; trial < 500; ++trial) {
      const int k = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(geo.n_cells)));
      const int direction = (rng() >> 63) ? 2 : -2;
      const int proposed = eta[k] + direction;
      if (proposed < -geo.cell_size || proposed > geo.cell_size) continue;
      const double delta = h_cg0_delta(eta, k, proposed, cgh, geo);
      eta[k] = proposed;
      const double full = h_cg0(eta, cgh, geo);
      worst = std::max(worst, std::abs((current + delta) - full));
      current = full;
    }
    return worst;
  });

  rec.run("reconstruction-identity", 0.5, [&] {
    const auto geo = LatticeGeometry::create(12, 3);
    const auto model = make_model(0.4, 1.0);
    const ReconstructionPlan plan;
    CounterRng rng(4242, 13);
    int mismatches = 0;
    for (int trial = 0; trial < 50; ++trial) {
      CoarseConfiguration eta;
      eta.blocks.resize(static_cast<std::size_t>(geo.n_cells));
      for (auto& e : eta.blocks) {
        int sum = 0;
        for (int i = 0; i < geo.cell_size; ++i) sum += rng.spin();
        e = sum;
      }
      const auto sigma = reconstruct(eta, model, geo, plan, rng(), caps);
      const auto back = coarse_map(sigma, geo);
      if (back.blocks != eta.blocks) ++mismatches;
    }
    return static_cast<double>(mismatches);
  });

  rec.run("even-pass-normalization", 1e-10, [&] {
    // the even-cell weight integrates to the three-cell partition function
    double worst = 0.0;
    for (int q : {2, 3}) {
      const auto model = make_model(0.5, 1.0);
      for (int el = -q; el <= q; el += 2) {
        for (int em = -q; em <= q; em += 2) {
          for (int er = -q; er <= q; er += 2) {
            KahanSum sum;
            for_each_cell_config(
                q, em,
                [&](std::span<const Spin> c) {
                  long long bonds = 0;
                  for (std::size_t i = 0; i + 1 < c.size(); ++i) bonds += c[i] * c[i + 1];
                  const double w = std::exp(-model.beta * model.short_range.coupling *
                                            static_cast<double>(bonds));
                  const double zl = oracle::cell_partition_function(
                      el, oracle::BoundarySpec::fixed_right(c.front()), model, q, caps);
                  const double zr = oracle::cell_partition_function(
                      er, oracle::BoundarySpec::fixed_left(c.back()), model, q, caps);
                  sum.add(w * zl * zr);
                },
                caps);
            const double lhs =
                sum.value() / static_cast<double>(cell_config_count(q, em));
            const double z3 = oracle::three_cell_partition_function(el, em, er, model, q, caps);
            worst = std::max(worst, std::abs(lhs / z3 - 1.0));
          }
        }
      }
    }
    return worst;
  });

  rec.run("relative-entropy-identity", 1e-10, [&] {
    const auto geo = LatticeGeometry::create(8, 2);
    const auto model = make_model(0.5, 1.0);
    const double rel = relative_entropy_per_site(model, geo, caps);
    if (rel < -1e-12) return 1.0;  // nonnegativity violated
    const double estimate = corollary_estimate_exact(model, geo, caps);
    return std::abs(estimate - rel * geo.n_sites);
  });

  rec.run("detailed-balance-toy", 1e-12, [&] {
    // explicit transition matrix of the pair-exchange kernel on a 3-state slice
    const int q = 3, eta = 1;
    const auto model = make_model(0.6, 1.0);
    const auto slice = enumerate_cell_configs(q, eta, caps);
    const auto weight = [&](const std::vector<Spin>& c) {
      double e = model.short_range.coupling * (c[0] * c[1] + c[1] * c[2]);
      e += model.short_range.coupling * (+1) * c[0];   // pinned left spin +1
      e += model.short_range.coupling * c[2] * (-1);   // pinned right spin -1
      return std::exp(-model.beta * e);
    };
    const int n_states = static_cast<int>(slice.size());
    const int n_plus = (eta + q) / 2, n_minus = q - n_plus;
    std::vector<double> pi(slice.size());
    double z = 0.0;
    for (int i = 0; i < n_states; ++i) z += (pi[static_cast<std::size_t>(i)] = weight(slice[static_cast<std::size_t>(i)]));
    for (auto& p : pi) p /= z;
    // transition i -> j: propose swapping one (+,-) pair; each of the
    // n_plus*n_minus pairs is equally likely and leads to a unique j
    std::vector<std::vector<double>> p_mat(slice.size(), std::vector<double>(slice.size(), 0.0));
    for (int i = 0; i < n_states; ++i) {
      auto c = slice[static_cast<std::size_t>(i)];
      for (int a = 0; a < q; ++a) {
        for (int b = 0; b < q; ++b) {
          if (c[static_cast<std::size_t>(a)] <= 0 || c[static_cast<std::size_t>(b)] >= 0) continue;
          auto d = c;
          std::swap(d[static_cast<std::size_t>(a)], d[static_cast<std::size_t>(b)]);
          const auto it = std::find(slice.begin(), slice.end(), d);
          const int j = static_cast<int>(it - slice.begin());
          const double proposal = 1.0 / (n_plus * n_minus);
          const double accept = std::min(1.0, weight(d) / weight(c));
          p_mat[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] += proposal * accept;
        }
      }
    }
    double worst = 0.0;
    for (int i = 0; i < n_states; ++i) {
      for (int j = 0; j < n_states; ++j) {
        worst = std::max(worst, std::abs(pi[static_cast<std::size_t>(i)] * p_mat[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] -
                                         pi[static_cast<std::size_t>(j)] * p_mat[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]));
      }
    }
    return worst;
  });

  ValidationReport report;
  report.checks = std::move(rec.checks);
  report.all_pass =
      std::all_of(report.checks.begin(), report.checks.end(), [](const auto& c) { return c.pass; });
  return report;
}

std::string validation_report_json(const ValidationReport& report) {
  nlohmann::json j;
  j["all_pass"] = report.all_pass;
  j["checks"] = nlohmann::json::array();
  for (const auto& c : report.checks) {
    j["checks"].push_back(
        {{"name", c.name}, {"measured", c.measured}, {"tolerance", c.tolerance}, {"pass", c.pass}});
  }
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// subcommand drivers
// ---------------------------------------------------------------------------

namespace {

namespace fs = std::filesystem;

fs::path ensure_output_dir(const ExperimentConfig& config) {
  fs::path dir(config.directory);
  fs::create_directories(dir);
  return dir;
}

nlohmann::json config_json(const ExperimentConfig& config) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : config.echo()) j[k] = v;
  return j;
}

void write_echo_comments(std::ostream& out, const ExperimentConfig& config) {
  for (const auto& [k, v] : config.echo()) {
    out << "# cfg." << k << " = " << v << "\n";
  }
}

bool wants_format(const ExperimentConfig& config, const std::string& format) {
  for (const auto& f : split_list(config.formats, ',')) {
    if (f == format) return true;
  }
  return false;
}

nlohmann::json stats_json(const ChainStats& stats, double energy_drift) {
  nlohmann::json j;
  j["acceptance_rate"] = stats.acceptance_rate;
  j["retained"] = stats.retained;
  j["energy_drift"] = energy_drift;
  j["observables"] = nlohmann::json::array();
  for (const auto& o : stats.observables) {
    j["observables"].push_back({{"name", o.name},
                                {"mean", o.mean},
                                {"std_error", o.std_error},
                                {"tau_int", o.tau_int},
                                {"count", o.count}});
  }
  return j;
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open '" + path.string() + "' for writing");
  out << content;
}

ExitCode classify(const std::exception& e, std::ostream& out) {
  out << "error: " << e.what() << "\n";
  if (dynamic_cast<const ConfigError*>(&e)) return ExitCode::ConfigurationError;
  if (dynamic_cast<const CapacityError*>(&e)) return ExitCode::CapacityExceeded;
  if (dynamic_cast<const CoverageError*>(&e)) return ExitCode::CoverageError;
  return ExitCode::Failure;
}

CorrelationTables resolve_phi_tables(const ExperimentConfig& config, std::ostream& out) {
  const auto geo = config.geometry();
  const auto model = config.model();
  if (!config.phi_table.empty()) {
    const fs::path path = fs::path(config.directory) / config.phi_table;
    if (fs::exists(path)) {
      auto tables = read_phi_table_file(path.string());
      if (tables.q() != geo.cell_size || std::abs(tables.coupling() - model.short_range.coupling) > 1e-12 ||
          std::abs(tables.beta() - model.beta) > 1e-12) {
        throw ConfigError("phi table '" + path.string() +
                          "' does not match the configured q/K/beta");
      }
      out << "loaded phi table " << path.string() << "\n";
      return tables;
    }
  }
  if (config.phi_mode == "exact") {
    return phi_tables_exact(geo.cell_size, model.short_range.coupling, model.beta, config.caps());
  }
  if (config.phi_mode == "mc") {
    return phi_tables_mc(geo.cell_size, model.short_range.coupling, model.beta, config.phi_steps,
                         config.phi_seed, config.phi_burn_in);
  }
  throw ConfigError("phi.mode must be exact or mc");
}

struct CsvStream {
  std::ofstream file;
  bool enabled = false;

  void open(const fs::path& path, const ExperimentConfig& config,
            const std::vector<std::string>& columns) {
    file.open(path, std::ios::binary);
    if (!file) throw ConfigError("cannot open '" + path.string() + "' for writing");
    enabled = true;
    write_echo_comments(file, config);
    file << "step";
    for (const auto& c : columns) file << ',' << c;
    file << "\n";
  }

  RowSink sink() {
    if (!enabled) return {};
    return [this](std::uint64_t step, std::span<const double> values) {
      file << step;
      for (double v : values) file << ',' << fmt17(v);
      file << "\n";
    };
  }
};

}  // namespace

ExitCode run_precompute_phi(const ExperimentConfig& config, std::ostream& out) {
  try {
    const auto dir = ensure_output_dir(config);
    if (config.phi_mode == "mc" && config.phi_steps <= config.phi_burn_in) {
      throw ConfigError("phi.steps must exceed phi.burn_in (steps=" +
                        std::to_string(config.phi_steps) +
                        ", burn_in=" + std::to_string(config.phi_burn_in) + ")");
    }
    const auto tables = resolve_phi_tables(config, out);
    const fs::path path =
        dir / (config.phi_table.empty() ? std::string("phi_table.txt") : config.phi_table);
    std::ostringstream body;
    write_phi_table(body, tables);
    write_echo_comments(body, config);
    write_text_file(path, body.str());
    out << "wrote " << path.string() << "\n";
    return ExitCode::Ok;
  } catch (const std::exception& e) {
    return classify(e, out);
  }
}

ExitCode run_simulate_micro(const ExperimentConfig& config, std::ostream& out) {
  try {
    const auto dir = ensure_output_dir(config);
    const auto model = config.model();
    const auto geo = config.geometry();
    const auto chain = config.chain();

    CsvStream stream;
    if (wants_format(config, "csv")) {
      stream.open(dir / "micro_stream.csv", config, micro_observable_names(chain.observables, geo));
    }
    const auto result = run_micro_chain(model, geo, chain, stream.sink());

    if (wants_format(config, "json")) {
      nlohmann::json j;
      j["config"] = config_json(config);
      j["chain"] = stats_json(result.stats, result.energy_drift);
      write_text_file(dir / "micro_summary.json", j.dump(2) + "\n");
    }
    for (const auto& o : result.stats.observables) {
      out << o.name << " = " << o.mean << " +- " << o.std_error << "\n";
    }
    out << "acceptance_rate = " << result.stats.acceptance_rate << "\n";
    return ExitCode::Ok;
  } catch (const std::exception& e) {
    return classify(e, out);
  }
}

ExitCode run_simulate_cg(const ExperimentConfig& config, std::ostream& out) {
  try {
    const auto dir = ensure_output_dir(config);
    const auto model = config.model();
    const auto geo = config.geometry();
    const auto chain = config.chain();
    auto tables = resolve_phi_tables(config, out);
    const auto cgh = CoarseHamiltonian::build(model, geo, std::move(tables), config.caps());

    CsvStream stream;
    if (wants_format(config, "csv")) {
      stream.open(dir / "cg_stream.csv", config, cg_observable_names(chain.observables, geo));
    }
    const auto result = run_cg_chain(cgh, geo, chain, stream.sink());

    if (wants_format(config, "json")) {
      nlohmann::json j;
      j["config"] = config_json(config);
      j["chain"] = stats_json(result.stats, result.energy_drift);
      j["phi_provenance"] = to_string(cgh.tables.provenance());
      write_text_file(dir / "cg_summary.json", j.dump(2) + "\n");
    }
    for (const auto& o : result.stats.observables) {
      out << o.name << " = " << o.mean << " +- " << o.std_error << "\n";
    }
    out << "acceptance_rate = " << result.stats.acceptance_rate << "\n";
    return ExitCode::Ok;
  } catch (const std::exception& e) {
    return classify(e, out);
  }
}

ExitCode run_validate(const ExperimentConfig& config, std::ostream& out) {
  try {
    const auto dir = ensure_output_dir(config);
    const auto report = run_validation_suite();
    for (const auto& c : report.checks) {
      out << (c.pass ? "PASS" : "FAIL") << "  " << c.name << "  measured=" << c.measured
          << "  tolerance=" << c.tolerance << "\n";
    }
    nlohmann::json j = nlohmann::json::parse(validation_report_json(report));
    j["config"] = config_json(config);
    write_text_file(dir / "validation_report.json", j.dump(2) + "\n");
    out << (report.all_pass ? "all checks passed" : "validation FAILED") << "\n";
    return report.all_pass ? ExitCode::Ok : ExitCode::ValidationFailed;
  } catch (const std::exception& e) {
    return classify(e, out);
  }
}

ExitCode run_reconstruct(const ExperimentConfig& config, std::ostream& out) {
  try {
    const auto dir = ensure_output_dir(config);
    const auto model = config.model();
    const auto geo = config.geometry();
    const auto chain = config.chain();
    const auto plan = config.reconstruction_plan();
    const auto caps = config.caps();

    if (model.long_range) {
      out << "note: reconstruction samples the short-range conditional law; the long-range "
             "part is not corrected and biases the microscopic statistics\n";
    }

    const auto cgh = CoarseHamiltonian::build_exact(model, geo, caps);

    std::optional<CellWindow> window;
    if (config.window) {
      const auto [a, b] = *config.window;
      if (b < a) throw ConfigError("window must be A..B with A <= B");
      window = CellWindow{a, b - a + 1};
    }

    std::ostringstream rows;
    write_echo_comments(rows, config);
    if (window) {
      rows << "# window cells " << window->begin << ".." << window->begin + window->length - 1
           << "\n";
    }
    std::uint64_t produced = 0;
    CounterRng seeder(chain.seed, 0xd1ce);
    run_cg_chain_collect(cgh, geo, chain, [&](const CoarseConfiguration& eta) {
      if (produced >= config.draws) return;
      ++produced;
      const auto draw_seed = seeder();
      std::vector<Spin> spins;
      if (window) {
        spins = local_reconstruct(eta, *window, model, geo, plan, draw_seed, caps).spins;
      } else {
        spins = reconstruct(eta, model, geo, plan, draw_seed, caps).spins;
      }
      for (const Spin s : spins) rows << (s > 0 ? '+' : '-');
      rows << "\n";
    });
    const fs::path rows_path = dir / "reconstructed.txt";
    write_text_file(rows_path, rows.str());
    out << "wrote " << produced << " configurations to " << rows_path.string() << "\n";

    if (!window && geo.n_sites <= 14) {
      const auto report = roundtrip_check(model, geo, plan, chain, caps);
      nlohmann::json j;
      j["config"] = config_json(config);
      j["total_variation"] = report.total_variation;
      j["analytic_total_variation"] = report.analytic_total_variation;
      j["tv_noise_scale"] = report.tv_noise_scale;
      j["magnetization_gap"] = report.magnetization_gap;
      j["magnetization_stderr"] = report.magnetization_stderr;
      j["energy_per_site_gap"] = report.energy_per_site_gap;
      j["energy_per_site_stderr"] = report.energy_per_site_stderr;
      j["draws"] = report.draws;
      if (model.long_range) {
        j["note"] = "short-range conditional law used; long-range bias not corrected";
      }
      write_text_file(dir / "roundtrip.json", j.dump(2) + "\n");
      out << "roundtrip total variation = " << report.total_variation
          << " (analytic bias " << report.analytic_total_variation << ")\n";
    } else if (!window) {
      out << "roundtrip comparison skipped: N exceeds the exact-reference cap\n";
    }
    return ExitCode::Ok;
  } catch (const std::exception& e) {
    return classify(e, out);
  }
}

}  // namespace cgmc
