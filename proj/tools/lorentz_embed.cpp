// lorentz-embed: learn hierarchy embeddings from pairwise similarity data in
// the Lorentz model of hyperbolic space, and evaluate how well the geometry
// recovers a ground-truth taxonomy.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lorentz/data.hpp"
#include "lorentz/embedding_io.hpp"
#include "lorentz/error.hpp"
#include "lorentz/eval.hpp"
#include "lorentz/objective.hpp"
#include "lorentz/render.hpp"

namespace {

enum LogLevel { kQuiet = 0, kError = 1, kWarn = 2, kInfo = 3, kDebug = 4 };

int g_log_level = kInfo;

void init_log_level() {
  const char* env = std::getenv("LORENTZ_EMBED_LOG");
  if (!env) return;
  const std::string v(env);
  if (v == "quiet") g_log_level = kQuiet;
  else if (v == "error") g_log_level = kError;
  else if (v == "warn") g_log_level = kWarn;
  else if (v == "info") g_log_level = kInfo;
  else if (v == "debug") g_log_level = kDebug;
  else std::fprintf(stderr, "[warn] unknown LORENTZ_EMBED_LOG level '%s'\n", env);
}

void logf(int level, const char* tag, const char* fmt, ...) {
  if (level > g_log_level) return;
  std::fprintf(stderr, "[%s] ", tag);
  va_list args;
  va_start(args, fmt);
  std::vfprintf(stderr, fmt, args);
  va_end(args);
  std::fprintf(stderr, "\n");
}

#define LOG_ERROR(...) logf(kError, "error", __VA_ARGS__)
#define LOG_WARN(...) logf(kWarn, "warn", __VA_ARGS__)
#define LOG_INFO(...) logf(kInfo, "info", __VA_ARGS__)
#define LOG_DEBUG(...) logf(kDebug, "debug", __VA_ARGS__)

struct TrainArgs {
  std::string mode = "taxonomy";
  std::string input, output;
  int dim = 5;
  double lr = 0.3;
  int epochs = 300;
  int burnin = 20;
  double burnin_factor = 0.1;
  int negatives = 50;
  uint64_t seed = 0;
  int threads = 1;
  int eval_every = 0;
};

lorentz::SimilarityDataset build_dataset(const std::string& mode, const std::string& input,
                                         lorentz::TaxonomyDag* dag_out) {
  if (mode == "taxonomy") {
    lorentz::TaxonomyDag dag = lorentz::load_taxonomy(input);
    auto ds = lorentz::closure_to_dataset(dag);
    if (dag_out) *dag_out = std::move(dag);
    return ds;
  }
  if (mode == "similarity") return lorentz::load_similarity(input);
  if (mode == "interactions")
    return lorentz::aggregate_interactions(lorentz::load_interactions(input));
  if (mode == "annotations")
    return lorentz::cognate_similarity(lorentz::load_annotations(input));
  throw std::invalid_argument("unknown mode: " + mode);
}

uint64_t hash_config(const TrainArgs& a) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "mode=%s dim=%d lr=%.17g epochs=%d burnin=%d bf=%.17g neg=%d seed=%llu",
                a.mode.c_str(), a.dim, a.lr, a.epochs, a.burnin, a.burnin_factor, a.negatives,
                static_cast<unsigned long long>(a.seed));
  return lorentz::fnv1a64(buf);
}

int cmd_train(const TrainArgs& args) {
  lorentz::TaxonomyDag dag;
  const bool has_dag = args.mode == "taxonomy";
  if (args.eval_every > 0 && !has_dag)
    throw std::invalid_argument("--eval-every needs --mode taxonomy (ground truth required)");

  auto ds = build_dataset(args.mode, args.input, has_dag ? &dag : nullptr);
  LOG_INFO("dataset: %zu concepts, %zu positive pairs", ds.concept_count(),
           ds.positives().size());

  lorentz::TrainConfig cfg;
  cfg.dim = args.dim;
  cfg.negatives = args.negatives;
  cfg.threads = args.threads;
  cfg.optimizer.learning_rate = args.lr;
  cfg.optimizer.epochs = args.epochs;
  cfg.optimizer.burnin_epochs = args.burnin;
  cfg.optimizer.burnin_factor = args.burnin_factor;
  cfg.optimizer.seed = args.seed;

  const int report_every = std::max(1, args.epochs / 10);
  cfg.epoch_callback = [&](int epoch, double mean_loss, const lorentz::EmbeddingTable& table) {
    if (g_log_level >= kDebug || (epoch + 1) % report_every == 0 || epoch + 1 == args.epochs)
      logf(kInfo, "info", "epoch %d/%d mean_loss=%.6f", epoch + 1, args.epochs, mean_loss);
    if (args.eval_every > 0 && ((epoch + 1) % args.eval_every == 0 || epoch + 1 == args.epochs)) {
      const auto report = lorentz::evaluate(table, dag, args.threads);
      logf(kInfo, "info", "epoch %d eval: mean_rank=%.4f map=%.4f spearman_rho=%.4f", epoch + 1,
           report.mean_rank, report.map, report.spearman_rho);
    }
  };

  const auto result = lorentz::train(ds, cfg);
  lorentz::save_embedding(args.output, result.table);

  lorentz::CheckpointMeta meta;
  meta.dim = args.dim;
  meta.concepts = result.table.size();
  meta.epochs = args.epochs;
  meta.seed = args.seed;
  meta.config_hash = hash_config(args);
  meta.final_mean_loss = result.epoch_mean_loss.back();
  lorentz::save_checkpoint_meta(args.output + ".meta", meta);

  LOG_INFO("wrote %s (%zu concepts, final mean loss %.6f)", args.output.c_str(),
           result.table.size(), meta.final_mean_loss);
  return 0;
}

lorentz::EmbeddingTable table_from_file(const lorentz::EmbeddingFile& f) {
  if (f.model == lorentz::ModelKind::lorentz) return f.to_table();
  // poincare input: map through the inverse diffeomorphism
  lorentz::EmbeddingTable table(f.ids, f.dim);
  for (size_t i = 0; i < f.rows.size(); ++i)
    table.set_point(i, lorentz::from_poincare(lorentz::PoincarePoint{f.rows[i]}));
  return table;
}

int cmd_eval(const std::string& embedding_path, const std::string& taxonomy_path,
             const std::string& output, int threads) {
  const auto table = table_from_file(lorentz::load_embedding(embedding_path));
  const auto dag = lorentz::load_taxonomy(taxonomy_path);
  const auto report = lorentz::evaluate(table, dag, threads);

  std::printf("mean_rank\t%.6f\n", report.mean_rank);
  std::printf("map\t%.6f\n", report.map);
  std::printf("spearman_rho\t%.6f\n", report.spearman_rho);
  size_t edges = 0;
  for (const auto& pn : report.per_node) edges += pn.degree;
  std::printf("# %zu nodes, %zu directed closure edges: MR %.3f, MAP %.3f, rho %.3f\n",
              report.per_node.size(), edges, report.mean_rank, report.map, report.spearman_rho);

  if (!output.empty()) {
    std::string out = "# id\tnorm\tnormalized_rank\tavg_precision\tmean_rank\tdegree\n";
    char buf[160];
    for (const auto& pn : report.per_node) {
      std::snprintf(buf, sizeof buf, "\t%.6f\t%.6f\t%.6f\t%.6f\t%zu\n", pn.norm,
                    pn.normalized_rank, pn.avg_precision, pn.mean_rank, pn.degree);
      out += pn.id;
      out += buf;
    }
    lorentz::write_file_atomic(output, out);
    LOG_INFO("wrote per-node report to %s", output.c_str());
  }
  return 0;
}

int cmd_convert(const std::string& input, const std::string& output, std::string target) {
  auto f = lorentz::load_embedding(input);
  if (target.empty())
    target = f.model == lorentz::ModelKind::lorentz ? "poincare" : "lorentz";

  lorentz::EmbeddingFile out;
  out.dim = f.dim;
  out.ids = f.ids;
  if (target == model_name(f.model)) {
    out.model = f.model;
    out.rows = f.rows;
  } else if (target == "poincare") {
    out.model = lorentz::ModelKind::poincare;
    for (size_t i = 0; i < f.rows.size(); ++i) {
      if (!lorentz::is_on_hyperboloid(f.rows[i]))
        throw lorentz::NumericError("row '" + f.ids[i] + "' is off the hyperboloid");
      out.rows.push_back(lorentz::to_poincare(lorentz::LorentzPoint{f.rows[i]}).coords);
    }
  } else {
    out.model = lorentz::ModelKind::lorentz;
    for (size_t i = 0; i < f.rows.size(); ++i) {
      try {
        out.rows.push_back(lorentz::from_poincare(lorentz::PoincarePoint{f.rows[i]}).coords);
      } catch (const lorentz::NumericError& e) {
        throw lorentz::NumericError("row '" + f.ids[i] + "': " + e.what());
      }
    }
  }
  lorentz::save_embedding(output, out);
  LOG_INFO("wrote %zu rows (%s) to %s", out.rows.size(), model_name(out.model), output.c_str());
  return 0;
}

int cmd_closure(const std::string& input, const std::string& output) {
  const auto dag = lorentz::load_taxonomy(input);
  const auto closure = lorentz::transitive_closure(dag);
  lorentz::write_file_atomic(output, lorentz::format_edges(dag, closure));
  std::printf("nodes\t%zu\n", dag.node_count());
  std::printf("edges\t%zu\n", dag.edge_count());
  std::printf("closure_edges\t%zu\n", closure.size());
  return 0;
}

struct RenderArgs {
  std::string input, output, edges_path;
  int size = 800;
  double point_radius = 2.5;
  bool labels = false;
};

int cmd_render(const RenderArgs& args) {
  const auto f = lorentz::load_embedding(args.input);
  if (f.dim != 2)
    throw std::invalid_argument("render needs a 2-d embedding (Poincare projection), got dim " +
                                std::to_string(f.dim));
  std::vector<lorentz::PoincarePoint> points;
  points.reserve(f.rows.size());
  if (f.model == lorentz::ModelKind::lorentz) {
    for (const auto& row : f.rows)
      points.push_back(lorentz::to_poincare(lorentz::LorentzPoint{row}));
  } else {
    for (const auto& row : f.rows) points.push_back(lorentz::PoincarePoint{row});
  }

  lorentz::RenderOptions opt;
  opt.size_px = args.size;
  opt.point_radius = args.point_radius;
  opt.draw_labels = args.labels;
  opt.draw_edges = !args.edges_path.empty();
  if (opt.draw_edges) {
    std::unordered_map<std::string, size_t> index;
    for (size_t i = 0; i < f.ids.size(); ++i) index.emplace(f.ids[i], i);
    lorentz::detail::for_each_tsv_line(
        args.edges_path, 2, 3, [&](const std::vector<std::string>& fields, size_t lineno) {
          const auto a = index.find(fields[0]);
          const auto b = index.find(fields[1]);
          if (a == index.end() || b == index.end())
            throw lorentz::DataError(args.edges_path + ":" + std::to_string(lineno) +
                                     ": edge endpoint not in embedding");
          opt.edges.emplace_back(a->second, b->second);
        });
  }
  lorentz::write_file_atomic(args.output, lorentz::render_svg(f.ids, points, opt));
  LOG_INFO("wrote %s (%zu points, %zu edges)", args.output.c_str(), points.size(),
           opt.edges.size());
  return 0;
}

int cmd_stats(const std::string& mode, const std::string& input) {
  if (mode == "taxonomy") {
    const auto dag = lorentz::load_taxonomy(input);
    const auto closure = lorentz::transitive_closure(dag);
    long depth = 0;
    if (dag.node_count() > 0) {
      const auto order = dag.topological_order();
      std::vector<long> down(dag.node_count(), 0);
      for (size_t u : order)
        for (size_t c : dag.children(u)) down[u] = std::max(down[u], down[c] + 1);
      for (size_t i = 0; i < dag.node_count(); ++i) depth = std::max(depth, down[i]);
    }
    std::printf("nodes\t%zu\n", dag.node_count());
    std::printf("edges\t%zu\n", dag.edge_count());
    std::printf("closure_edges\t%zu\n", closure.size());
    std::printf("depth\t%ld\n", depth);
    std::printf("roots\t%zu\n", dag.roots().size());
    return 0;
  }
  const auto ds = build_dataset(mode, input, nullptr);
  double min_s = 0, max_s = 0, sum_s = 0;
  bool first = true;
  for (auto& [i, j] : ds.positives()) {
    const double s = ds.score(i, j);
    min_s = first ? s : std::min(min_s, s);
    max_s = first ? s : std::max(max_s, s);
    sum_s += s;
    first = false;
  }
  std::printf("concepts\t%zu\n", ds.concept_count());
  std::printf("positive_pairs\t%zu\n", ds.positives().size());
  if (!ds.positives().empty()) {
    std::printf("score_min\t%.6g\n", min_s);
    std::printf("score_max\t%.6g\n", max_s);
    std::printf("score_mean\t%.6g\n", sum_s / double(ds.positives().size()));
  }
  return 0;
}

const std::vector<std::string> kModes = {"taxonomy", "similarity", "interactions", "annotations"};

}  // namespace

int main(int argc, char** argv) {
  init_log_level();

  CLI::App app{"hierarchy embeddings in the Lorentz model of hyperbolic space"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "learn embeddings from similarity data");
  train->set_config("--config", "", "read options from an INI/TOML file");
  train->add_option("--mode", train_args.mode, "input kind")->check(CLI::IsMember(kModes));
  train->add_option("--input", train_args.input, "input TSV")->required();
  train->add_option("--output", train_args.output, "embedding TSV to write")->required();
  train->add_option("--dim", train_args.dim, "manifold dimension (>= 2)");
  train->add_option("--lr", train_args.lr, "learning rate");
  train->add_option("--epochs", train_args.epochs, "training epochs");
  train->add_option("--burnin", train_args.burnin, "burn-in epochs at reduced rate");
  train->add_option("--burnin-factor", train_args.burnin_factor, "burn-in rate multiplier");
  train->add_option("--negatives", train_args.negatives, "negative samples per step");
  train->add_option("--seed", train_args.seed, "rng seed");
  train->add_option("--threads", train_args.threads, "worker threads (>1 is non-deterministic)");
  train->add_option("--eval-every", train_args.eval_every,
                    "evaluate against the taxonomy every N epochs (taxonomy mode)");

  std::string eval_embeddings, eval_input, eval_output;
  int eval_threads = 1;
  auto* eval = app.add_subcommand("eval", "score an embedding against a taxonomy");
  eval->set_config("--config");
  eval->add_option("--embeddings", eval_embeddings, "embedding TSV")->required();
  eval->add_option("--input", eval_input, "taxonomy edge TSV")->required();
  eval->add_option("--output", eval_output, "optional per-node report TSV");
  eval->add_option("--threads", eval_threads, "worker threads");

  std::string conv_input, conv_output, conv_target;
  auto* convert = app.add_subcommand("convert", "map an embedding between models");
  convert->add_option("--input", conv_input, "embedding TSV")->required();
  convert->add_option("--output", conv_output, "embedding TSV to write")->required();
  convert->add_option("--to", conv_target, "target model (default: the other one)")
      ->check(CLI::IsMember({"lorentz", "poincare"}));

  std::string closure_input, closure_output;
  auto* closure = app.add_subcommand("closure", "emit the transitive closure of a taxonomy");
  closure->add_option("--input", closure_input, "taxonomy edge TSV")->required();
  closure->add_option("--output", closure_output, "closure edge TSV to write")->required();

  RenderArgs render_args;
  auto* render = app.add_subcommand("render", "draw a 2-d embedding as an SVG disk plot");
  render->add_option("--input", render_args.input, "embedding TSV (dim 2)")->required();
  render->add_option("--output", render_args.output, "SVG path to write")->required();
  render->add_option("--size", render_args.size, "canvas size in px")->check(CLI::PositiveNumber);
  render->add_option("--point-radius", render_args.point_radius, "dot radius in px");
  render->add_option("--edges", render_args.edges_path, "edge TSV to draw as segments");
  render->add_flag("--labels", render_args.labels, "draw id labels");

  std::string stats_mode = "taxonomy", stats_input;
  auto* stats = app.add_subcommand("stats", "print dataset statistics");
  stats->add_option("--mode", stats_mode, "input kind")->check(CLI::IsMember(kModes));
  stats->add_option("--input", stats_input, "input TSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  }

  try {
    if (train->parsed()) return cmd_train(train_args);
    if (eval->parsed()) return cmd_eval(eval_embeddings, eval_input, eval_output, eval_threads);
    if (convert->parsed()) return cmd_convert(conv_input, conv_output, conv_target);
    if (closure->parsed()) return cmd_closure(closure_input, closure_output);
    if (render->parsed()) return cmd_render(render_args);
    if (stats->parsed()) return cmd_stats(stats_mode, stats_input);
  } catch (const lorentz::DataError& e) {
    LOG_ERROR("%s", e.what());
    return 2;
  } catch (const lorentz::NumericError& e) {
    LOG_ERROR("%s", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    LOG_ERROR("%s", e.what());
    return 1;
  } catch (const std::exception& e) {
    LOG_ERROR("%s", e.what());
    return 1;
  }
  return 0;
}
