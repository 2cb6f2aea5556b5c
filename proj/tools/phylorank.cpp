// phylorank: exact probabilities, rank distributions, expected edge lengths
// and trait-rate statistics for rooted phylogenetic trees under the Yule and
// uniform models.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "phylorank/branch_lengths.hpp"
#include "phylorank/model_selection.hpp"
#include "phylorank/newick.hpp"
#include "phylorank/parallel.hpp"
#include "phylorank/rank_inference.hpp"
#include "phylorank/simulate.hpp"
#include "phylorank/states.hpp"
#include "phylorank/trait_rates.hpp"
#include "phylorank/tree_models.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace phylorank;

constexpr int kExitParse = 2;
constexpr int kExitVertex = 3;
constexpr int kExitStates = 4;

struct CliError : std::runtime_error {
  CliError(int code, const std::string& msg) : std::runtime_error(msg), code(code) {}
  int code;
};

// Fixed 12-significant-digit float rendering so repeated runs emit identical
// bytes.
double rounded(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return std::strtod(buf, nullptr);
}

json rational_json(const BigRational& q) { return json(to_string(q)); }

void put_rational(json& obj, const std::string& key, const BigRational& q) {
  obj[key] = rounded(to_double(q));
  obj[key + "_exact"] = to_string(q);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError(kExitParse, "cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// FNV-1a over the raw input bytes; commands report it so outputs can be tied
// back to their inputs.
std::string digest(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

PhyloTree load_tree(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return parse_newick(text);
  } catch (const NewickError& e) {
    throw CliError(kExitParse, e.what());
  }
}

// Interior vertex named either by its label or by the comma-joined sorted
// leaf labels of its clade.
VertexId resolve_vertex(const PhyloTree& t, const std::string& spec) {
  VertexId by_label = kNoVertex;
  int label_hits = 0;
  for (VertexId v : t.interior_vertices())
    if (t.label(v) == spec) {
      by_label = v;
      ++label_hits;
    }
  if (label_hits == 1) return by_label;
  if (label_hits > 1)
    throw CliError(kExitVertex, "vertex spec '" + spec + "' is ambiguous");
  std::vector<std::string> labels;
  std::string item;
  std::istringstream in(spec);
  while (std::getline(in, item, ','))
    if (!item.empty()) labels.push_back(item);
  std::sort(labels.begin(), labels.end());
  for (const auto& name : labels)
    if (t.find_leaf(name) == kNoVertex)
      throw CliError(kExitVertex, "unknown vertex spec '" + spec + "'");
  for (VertexId v : t.interior_vertices())
    if (t.clade_labels(v) == labels) return v;
  throw CliError(kExitVertex, "no clade matches vertex spec '" + spec + "'");
}

std::string clade_spec(const PhyloTree& t, VertexId v) {
  if (t.is_leaf(v)) return t.label(v);
  std::string out;
  for (const auto& name : t.clade_labels(v)) {
    if (!out.empty()) out += ",";
    out += name;
  }
  return out;
}

void emit(const json& payload) { std::cout << payload.dump(2) << "\n"; }

// --- subcommand bodies -------------------------------------------------------

int cmd_stats(const std::string& tree_path, bool aggregate) {
  const std::string text = read_file(tree_path == "-" ? "/dev/stdin" : tree_path);
  if (aggregate) {
    std::map<std::string, long long> counts;
    std::istringstream in(text);
    std::string line;
    long long total = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      try {
        ++counts[topology_key(parse_newick(line))];
      } catch (const NewickError& e) {
        throw CliError(kExitParse, e.what());
      }
      ++total;
    }
    json out;
    out["command"] = "stats";
    out["inputs_digest"] = digest(text);
    out["trees"] = total;
    out["distinct_topologies"] = counts.size();
    json freq = json::object();
    for (const auto& [key, count] : counts) freq[key] = count;
    out["counts"] = freq;
    emit(out);
    return 0;
  }
  PhyloTree t;
  try {
    t = parse_newick(text);
  } catch (const NewickError& e) {
    throw CliError(kExitParse, e.what());
  }
  json out;
  out["command"] = "stats";
  out["inputs_digest"] = digest(text);
  out["n"] = t.leaf_count();
  out["interior"] = t.interior_count();
  out["binary"] = t.is_binary();
  const auto stats = lambda_values(t);
  out["lambda_product"] = to_string(stats.product);
  out["count_rank_functions"] = to_string(count_rank_functions(t));
  if (t.leaf_count() >= 2) {
    out["count_trees"] = to_string(count_trees(t.leaf_count()));
    out["count_ranked_trees"] = to_string(count_ranked_trees(t.leaf_count()));
  }
  if (t.is_binary()) {
    const auto mp = model_probabilities(t);
    put_rational(out, "p_uniform", mp.p_uniform);
    put_rational(out, "p_yule", mp.p_yule);
    put_rational(out, "p_ranked_yule", mp.p_ranked_yule);
    put_rational(out, "p_rank_given_tree", mp.p_rank_given_tree);
    put_rational(out, "bayes_factor", mp.bayes_factor_yule_over_uniform);
  } else {
    out["p_uniform"] = nullptr;
    out["p_yule"] = nullptr;
    bool resolvable = true;
    for (VertexId v : t.interior_vertices())
      if (t.children(v).size() > 4) resolvable = false;
    if (resolvable)
      put_rational(out, "bayes_factor", bayes_factor_resolved(t));
    else
      out["bayes_factor"] = nullptr;
  }
  emit(out);
  return 0;
}

int cmd_rankprob(const std::string& tree_path, const std::string& vertex_spec,
                 bool general) {
  auto t = load_tree(tree_path);
  const VertexId v = resolve_vertex(t, vertex_spec);
  if (!general && !t.is_binary())
    throw CliError(kExitParse, "tree is not binary; pass --general");
  const RankDistribution dist = general ? rank_prob_gen(t, v) : rank_prob(t, v);
  const auto moments = expected_rank(t, v);
  json out;
  out["command"] = "rankprob";
  out["inputs_digest"] = digest(read_file(tree_path));
  out["vertex"] = clade_spec(t, v);
  out["general"] = general;
  json probs = json::array();
  json exact = json::array();
  json counts = json::array();
  for (int i = 1; i <= dist.size(); ++i) {
    probs.push_back(rounded(to_double(dist.prob(i))));
    exact.push_back(to_string(dist.prob(i)));
    counts.push_back(to_string(dist.count(i)));
  }
  out["probs"] = probs;
  out["probs_exact"] = exact;
  out["counts"] = counts;
  put_rational(out, "mean", moments.mean);
  put_rational(out, "variance", moments.variance);
  emit(out);
  return 0;
}

int cmd_compare(const std::string& tree_path, const std::string& u_spec,
                const std::string& v_spec) {
  auto t = load_tree(tree_path);
  const VertexId u = resolve_vertex(t, u_spec);
  const VertexId v = resolve_vertex(t, v_spec);
  if (u == v) throw CliError(kExitVertex, "u and v must be distinct");
  json out;
  out["command"] = "compare";
  out["inputs_digest"] = digest(read_file(tree_path));
  out["u"] = clade_spec(t, u);
  out["v"] = clade_spec(t, v);
  put_rational(out, "p_u_before_v", compare(t, u, v));
  emit(out);
  return 0;
}

int cmd_edgelens(const std::string& tree_path, const std::string& pendant_policy,
                 double offset, const std::string& format) {
  auto t = load_tree(tree_path);
  EdgeLengthOptions opts;
  if (pendant_policy == "yule-tail") opts.pendant = PendantPolicy::yule_tail;
  else if (pendant_policy != "undefined")
    throw CliError(1, "unknown pendant policy '" + pendant_policy + "'");
  opts.terminal_offset = offset;
  // fan the per-edge computations out to the worker pool
  const auto order = [&] {
    std::vector<VertexId> edges;
    for (VertexId v : t.preorder())
      if (v != t.root()) edges.push_back(v);
    return edges;
  }();
  std::vector<std::optional<double>> values(order.size());
  parallel_for(order.size(), [&](std::size_t k) {
    const VertexId v = order[k];
    if (t.is_interior(v))
      values[k] = expected_edge_length_weighted(t, t.parent(v), v);
    else if (opts.pendant == PendantPolicy::yule_tail)
      values[k] = expected_pendant_length(t, t.parent(v), opts.terminal_offset);
  });
  if (format == "csv") {
    std::cout << "parent_clade,child_clade,expected_length\n";
    for (std::size_t k = 0; k < order.size(); ++k) {
      const VertexId v = order[k];
      std::cout << '"' << clade_spec(t, t.parent(v)) << "\",\"" << clade_spec(t, v) << "\",";
      if (values[k]) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.12g", *values[k]);
        std::cout << buf;
      } else {
        std::cout << "NA";
      }
      std::cout << "\n";
    }
    return 0;
  }
  json rows = json::array();
  for (std::size_t k = 0; k < order.size(); ++k) {
    json row;
    row["parent_clade"] = clade_spec(t, t.parent(order[k]));
    row["child_clade"] = clade_spec(t, order[k]);
    row["expected_length"] = values[k] ? json(rounded(*values[k])) : json(nullptr);
    rows.push_back(row);
  }
  json out;
  out["command"] = "edgelens";
  out["inputs_digest"] = digest(read_file(tree_path));
  out["edges"] = rows;
  emit(out);
  return 0;
}

int cmd_modeltest(const std::string& tree_path) {
  auto t = load_tree(tree_path);
  const ModelReport report = lr_test(t);
  json out;
  out["command"] = "modeltest";
  out["inputs_digest"] = digest(read_file(tree_path));
  out["n"] = report.n;
  out["log_lr"] = rounded(report.log_lr);
  out["decision"] = report.accept_yule ? "accept-yule" : "reject-yule";
  put_rational(out, "bayes_factor", report.bayes_factor);
  out["power_bound"] = report.power_bound ? json(rounded(*report.power_bound)) : json(nullptr);
  out["kl_yule_uniform"] = report.kl_yu ? json(rounded(*report.kl_yu)) : json(nullptr);
  out["kl_uniform_yule"] = report.kl_uy ? json(rounded(*report.kl_uy)) : json(nullptr);
  emit(out);
  return 0;
}

int cmd_klstats(int n) {
  json out;
  out["command"] = "klstats";
  out["n"] = n;
  out["entropy_yule"] = rounded(entropy_yule(n));
  out["entropy_uniform"] = rounded(entropy_uniform(n));
  out["kl_yule_uniform"] = rounded(kl_yule_uniform(n));
  out["kl_uniform_yule"] = rounded(kl_uniform_yule(n));
  out["s_n"] = rounded(s_n(n));
  out["s_prime_n"] = rounded(s_prime_n(n));
  out["power_bound"] = rounded(power_bound(n));
  emit(out);
  return 0;
}

int cmd_specrate(const std::string& tree_path, const std::string& states_path,
                 double r_alpha, double r_beta) {
  auto t = load_tree(tree_path);
  LeafStates chi;
  try {
    chi = parse_states_tsv(t, read_file(states_path));
  } catch (const StatesError& e) {
    throw CliError(kExitStates, e.what());
  }
  if (!chi.complete(t)) throw CliError(kExitStates, "states file misses some leaves");
  const RateParams rates{r_alpha, r_beta};
  GammaEdgeStats stats;
  try {
    stats = psi_statistics(t, chi, rates);
  } catch (const TraitError& e) {
    throw CliError(kExitParse, e.what());
  }
  static const char* kGamma[4] = {"alpha_alpha", "alpha_beta", "beta_alpha", "beta_beta"};
  json edges = json::array();
  for (std::size_t k = 0; k < stats.edges.size(); ++k) {
    json row;
    row["parent_clade"] = clade_spec(t, t.parent(stats.edges[k]));
    row["child_clade"] = clade_spec(t, stats.edges[k]);
    for (int g = 0; g < 4; ++g) row[kGamma[g]] = rounded(stats.posteriors[k][g]);
    edges.push_back(row);
  }
  json out;
  out["command"] = "specrate";
  out["inputs_digest"] = digest(read_file(tree_path) + read_file(states_path));
  out["r_alpha"] = r_alpha;
  out["r_beta"] = r_beta;
  out["edges"] = edges;
  json psi = json::object();
  for (int g = 0; g < 4; ++g)
    psi[kGamma[g]] = stats.psi[g] ? json(rounded(*stats.psi[g])) : json(nullptr);
  out["psi"] = psi;
  emit(out);
  return 0;
}

int cmd_simulate(const SimConfig& cfg, const std::string& states_out) {
  cfg.validate();
  if (!states_out.empty() && cfg.replicates != 1)
    throw CliError(1, "--states-out requires --replicates 1");
  if (!states_out.empty() && !cfg.rates)
    throw CliError(1, "--states-out requires --ralpha and --rbeta");
  if (cfg.rates && cfg.model != SimModel::yule_continuous)
    throw CliError(1, "state simulation needs --model yule-continuous");
  std::vector<std::string> lines(cfg.replicates);
  std::vector<std::string> tsv(cfg.replicates);
  parallel_for(cfg.replicates, [&](std::size_t rep) {
    RngStream rng(cfg.seed, rep);
    PhyloTree tree = [&] {
      switch (cfg.model) {
        case SimModel::yule_ranked: return sample_yule_ranked(cfg.n, rng).tree;
        case SimModel::yule_continuous: return sample_yule_continuous(cfg.n, rng).tree;
        case SimModel::uniform: return sample_uniform(cfg.n, rng);
        case SimModel::coalescent: return sample_coalescent(cfg.n, rng).tree;
      }
      throw std::logic_error("unreachable");
    }();
    lines[rep] = write_newick(tree);
    if (cfg.rates) {
      const auto states = sample_states(tree, *cfg.rates, rng);
      tsv[rep] = write_states_tsv(tree, leaf_states_of(tree, states));
    }
  });
  for (const auto& line : lines) std::cout << line << "\n";
  if (!states_out.empty()) {
    std::ofstream out(states_out, std::ios::binary);
    if (!out) throw CliError(1, "cannot write " + states_out);
    out << tsv[0];
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact Yule/uniform tree statistics, rank distributions and trait rates"};
  app.require_subcommand(1);

  std::string tree_path, vertex_spec, u_spec, v_spec, states_path, states_out;
  std::string pendant_policy = "undefined";
  std::string format = "csv";  // the edge table is CSV unless asked otherwise
  std::string model_name = "yule-ranked";
  bool general = false;
  bool aggregate = false;
  double r_alpha = 1.0, r_beta = 1.0, offset = 0.0;
  int n = 0;
  SimConfig sim;

  auto* stats = app.add_subcommand("stats", "tree counts, probabilities and Bayes factor");
  stats->add_option("--tree", tree_path, "newick file ('-' for stdin)")->required();
  stats->add_flag("--aggregate", aggregate, "frequency table over a batch of newick lines");

  auto* rankprob = app.add_subcommand("rankprob", "rank distribution of an interior vertex");
  rankprob->add_option("--tree", tree_path)->required();
  rankprob->add_option("--vertex", vertex_spec, "interior label or comma-joined clade leaves")
      ->required();
  rankprob->add_flag("--general", general, "multifurcation-ready variant");

  auto* comparecmd = app.add_subcommand("compare", "P[r(u) < r(v)]");
  comparecmd->add_option("--tree", tree_path)->required();
  comparecmd->add_option("--u", u_spec)->required();
  comparecmd->add_option("--v", v_spec)->required();

  auto* edgelens = app.add_subcommand("edgelens", "expected edge lengths");
  edgelens->add_option("--tree", tree_path)->required();
  edgelens->add_option("--pendant-policy", pendant_policy, "undefined|yule-tail");
  edgelens->add_option("--terminal-offset", offset, "added to yule-tail pendant lengths");
  edgelens->add_option("--format", format, "csv|json")->check(CLI::IsMember({"json", "csv"}));

  auto* modeltest = app.add_subcommand("modeltest", "log-likelihood-ratio test of Yule");
  modeltest->add_option("--tree", tree_path)->required();

  auto* klstats = app.add_subcommand("klstats", "entropies, KL distances and power bound");
  klstats->add_option("--n", n, "leaf count")->required()->check(CLI::Range(3, 1000000));

  auto* specrate = app.add_subcommand("specrate", "per-edge state posteriors and psi");
  specrate->add_option("--tree", tree_path)->required();
  specrate->add_option("--states", states_path, "two-column TSV of leaf states")->required();
  specrate->add_option("--ralpha", r_alpha, "rate alpha->beta")->required();
  specrate->add_option("--rbeta", r_beta, "rate beta->alpha")->required();

  auto* simulate = app.add_subcommand("simulate", "tree and state simulators");
  simulate->add_option("--model", model_name, "yule-ranked|yule-continuous|uniform|coalescent")
      ->check(CLI::IsMember({"yule-ranked", "yule-continuous", "uniform", "coalescent"}));
  simulate->add_option("--n", sim.n, "leaf count")->required();
  simulate->add_option("--seed", sim.seed, "stream seed");
  simulate->add_option("--replicates", sim.replicates, "independent draws");
  simulate->add_option("--ralpha", r_alpha, "state change rate alpha->beta");
  simulate->add_option("--rbeta", r_beta, "state change rate beta->alpha");
  simulate->add_option("--states-out", states_out, "write a states TSV (single replicate)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(stats)) return cmd_stats(tree_path, aggregate);
    if (app.got_subcommand(rankprob)) return cmd_rankprob(tree_path, vertex_spec, general);
    if (app.got_subcommand(comparecmd)) return cmd_compare(tree_path, u_spec, v_spec);
    if (app.got_subcommand(edgelens))
      return cmd_edgelens(tree_path, pendant_policy, offset, format);
    if (app.got_subcommand(modeltest)) return cmd_modeltest(tree_path);
    if (app.got_subcommand(klstats)) return cmd_klstats(n);
    if (app.got_subcommand(specrate))
      return cmd_specrate(tree_path, states_path, r_alpha, r_beta);
    if (app.got_subcommand(simulate)) {
      if (model_name == "yule-ranked") sim.model = SimModel::yule_ranked;
      else if (model_name == "yule-continuous") sim.model = SimModel::yule_continuous;
      else if (model_name == "uniform") sim.model = SimModel::uniform;
      else sim.model = SimModel::coalescent;
      if (simulate->count("--ralpha") || simulate->count("--rbeta"))
        sim.rates = RateParams{r_alpha, r_beta};
      return cmd_simulate(sim, states_out);
    }
  } catch (const CliError& e) {
    json err;
    err["error"] = e.what();
    std::cerr << err.dump() << "\n";
    return e.code;
  } catch (const std::exception& e) {
    json err;
    err["error"] = e.what();
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
