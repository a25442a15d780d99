#include "cli.hpp"

#include <charconv>
#include <cstdlib>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "dafa/attention.hpp"
#include "dafa/conllu.hpp"
#include "dafa/dep_matrix.hpp"
#include "dafa/fusion.hpp"
#include "dafa/gradcheck.hpp"
#include "dafa/json_io.hpp"
#include "dafa/pipeline.hpp"
#include "dafa/tfidf.hpp"

namespace dafa::cli {

namespace {

using nlohmann::json;

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr std::uint64_t kDefaultSeed = 42;

std::uint64_t default_seed() {
  if (const char* env = std::getenv("DAFA_SEED")) {
    std::uint64_t v = 0;
    const char* end = env + std::char_traits<char>::length(env);
    auto [ptr, ec] = std::from_chars(env, end, v);
    if (ec == std::errc() && ptr == end && ptr != env) return v;
  }
  return kDefaultSeed;
}

std::optional<std::uint64_t> as_seed(const std::string& s) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec == std::errc() && ptr == s.data() + s.size() && !s.empty()) return v;
  return std::nullopt;
}

template <typename F>
void validated(F&& f) {
  try {
    f();
  } catch (const std::invalid_argument& e) {
    throw ValidationError(e.what());
  }
}

void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-")
    out << content;
  else
    write_file(path, content);
}

struct Options {
  std::string corpus, pairs, pair, pair_id, tfidf, config, signals, params, out, op = "fuse";
  double theta = 2.0, alpha = 1.0, nu = 0.5, tol = 1e-5, eps = 1e-5;
  std::uint64_t seed = 0;
  Eigen::Index d_model = 16, heads = 2, d_k = 8, d_v = 8, d_hid = 8;
  Eigen::Index gc_d_seq = 3, gc_d_model = 4, gc_d_k = 3, gc_d_v = 2, gc_d_hid = 2;
};

void add_dep_flags(CLI::App* app, Options& o) {
  app->add_option("--theta", o.theta, "Dependency-type match factor (> 0)")->capture_default_str();
  app->add_option("--alpha", o.alpha, "Fixed score for matching subtree nodes (>= 0)")->capture_default_str();
  app->add_option("--nu", o.nu, "Subtree decay factor in [0, 1)")->capture_default_str();
}

void add_layer_flags(CLI::App* app, Options& o) {
  add_dep_flags(app, o);
  app->add_option("--d-model", o.d_model, "Embedding width")->capture_default_str();
  app->add_option("--heads", o.heads, "Attention heads")->capture_default_str();
  app->add_option("--d-k", o.d_k, "Query/key width per head")->capture_default_str();
  app->add_option("--d-v", o.d_v, "Value width per head")->capture_default_str();
  app->add_option("--d-hid", o.d_hid, "Fusion hidden size")->capture_default_str();
}

DepMatrixConfig dep_config(const Options& o) {
  DepMatrixConfig c{o.theta, o.alpha, o.nu};
  validated([&] { c.validate(); });
  return c;
}

LayerConfig layer_config(const Options& o) {
  LayerConfig c;
  c.dep = dep_config(o);
  c.attn = AttnConfig{o.d_model, o.heads, o.d_k, o.d_v};
  c.d_hid = o.d_hid;
  validated([&] {
    c.attn.validate();
    if (c.d_hid < 1) throw std::invalid_argument("d_hid must be >= 1");
  });
  return c;
}

// Overrides attention/dependency settings from an optional JSON config file.
void apply_config_file(const std::string& path, Options& o) {
  if (path.empty()) return;
  const json j = json::parse(read_file(path));
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("theta", o.theta);
  get("alpha", o.alpha);
  get("nu", o.nu);
  get("d_model", o.d_model);
  get("heads", o.heads);
  get("d_k", o.d_k);
  get("d_v", o.d_v);
  get("d_hid", o.d_hid);
}

std::vector<DepSentence> corpus_of(const std::vector<SentencePair>& pairs) {
  std::vector<DepSentence> c;
  for (const auto& p : pairs) {
    c.push_back(p.a);
    c.push_back(p.b);
  }
  return c;
}

int cmd_tfidf_fit(const Options& o, std::ostream& out) {
  const auto corpus = parse_conllu(read_file(o.corpus));
  TfIdfModel model;
  validated([&] { model = TfIdfModel::fit(corpus); });
  emit(o.out, model.serialize() + "\n", out);
  return 0;
}

int cmd_matrix(const Options& o, std::ostream& out) {
  const auto cfg = dep_config(o);
  const auto pairs = parse_pairs_jsonl(read_file(o.pairs));
  const auto tfidf = TfIdfModel::deserialize(read_file(o.tfidf));
  std::string lines;
  for (const auto& p : pairs) {
    const auto m = base_matrix(p.a, p.b, cfg);
    const auto s = subgraph_matrix(p.a, p.b, cfg);
    const auto mf = final_matrix(m, s, tfidf.weights(p.a), tfidf.weights(p.b));
    json j;
    j["id"] = p.id;
    j["n"] = p.a.size();
    j["m"] = p.b.size();
    j["M"] = row_major_to_json(m);
    j["S"] = row_major_to_json(s);
    j["MF"] = row_major_to_json(mf);
    lines += j.dump() + "\n";
  }
  emit(o.out, lines, out);
  return 0;
}

int cmd_attend(Options o, std::ostream& out) {
  apply_config_file(o.config, o);
  const auto cfg = layer_config(o);
  const auto pairs = parse_pairs_jsonl(read_file(o.pair));
  if (pairs.empty()) throw std::invalid_argument("'" + o.pair + "' holds no pair records");
  const SentencePair* pair = &pairs.front();
  if (!o.pair_id.empty()) {
    pair = nullptr;
    for (const auto& p : pairs)
      if (p.id == o.pair_id) pair = &p;
    if (!pair) throw std::invalid_argument("no record with id '" + o.pair_id + "'");
  }
  const TfIdfModel tfidf =
      o.tfidf.empty() ? TfIdfModel::fit({pair->a, pair->b}) : TfIdfModel::deserialize(read_file(o.tfidf));

  const auto layout = build_layout(pair->a, pair->b);
  const auto calibration = embed_calibration(final_matrix(pair->a, pair->b, tfidf, cfg.dep), layout);
  const EmbeddingTable emb(pair_vocabulary({*pair}), cfg.attn.d_model, o.seed);
  Rng rng(o.seed);
  const auto params = AttnParams::random(cfg.attn, rng);
  const auto heads = multi_head_dafa(emb.embed(sequence_tokens(pair->a, pair->b)), params, calibration);

  json j;
  j["id"] = pair->id;
  j["tokens"] = sequence_tokens(pair->a, pair->b);
  j["d_seq"] = layout.d_seq;
  j["calibration"] = matrix_to_json(calibration);
  j["heads"] = json::array();
  for (const auto& h : heads)
    j["heads"].push_back({{"sem_weights", matrix_to_json(h.sem_weights)}, {"dep_weights", matrix_to_json(h.dep_weights)}});
  emit(o.out, j.dump(1) + "\n", out);
  return 0;
}

int cmd_fuse(const Options& o, std::ostream& out) {
  const json sj = json::parse(read_file(o.signals));
  if (!sj.is_object() || !sj.contains("sem") || !sj.contains("dep"))
    throw std::invalid_argument("signals JSON needs 'sem' and 'dep' matrices");
  const auto sem = matrix_from_json(sj["sem"]);
  const auto dep = matrix_from_json(sj["dep"]);
  if (sem.rows() != dep.rows() || sem.cols() != dep.cols() || sem.size() == 0)
    throw ValidationError("sem and dep must be non-empty and the same shape");

  FusionParams params;
  if (auto seed = as_seed(o.params)) {
    if (o.d_hid < 1) throw ValidationError("d_hid must be >= 1");
    Rng rng(*seed);
    params = FusionParams::random(sem.rows(), sem.cols(), o.d_hid, rng);
  } else {
    params = fusion_params_from_json(json::parse(read_file(o.params)));
  }
  FusionOutput r;
  validated([&] { r = fuse(sem, dep, params); });
  json j;
  j["L"] = matrix_to_json(r.l);
  j["g"] = vector_to_json(r.g);
  j["f"] = vector_to_json(r.f);
  emit(o.out, j.dump(1) + "\n", out);
  return 0;
}

json report_json(const GradReport& r) {
  json j;
  j["op"] = r.op_name;
  j["seed"] = r.seed;
  j["tol"] = r.tolerance;
  j["pass"] = r.pass;
  j["params"] = json::array();
  for (const auto& e : r.entries)
    j["params"].push_back(
        {{"name", e.name}, {"max_rel_error", e.max_rel_error}, {"max_abs_error", e.max_abs_error}, {"pass", e.pass}});
  return j;
}

int cmd_gradcheck(const Options& o, std::ostream& out) {
  std::vector<GradOp> ops;
  if (o.op == "attend")
    ops = {GradOp::sem_attention, GradOp::dep_attention};
  else
    validated([&] { ops = {parse_grad_op(o.op)}; });
  GradConfig cfg;
  cfg.d_seq = o.gc_d_seq;
  cfg.d_model = o.gc_d_model;
  cfg.d_k = o.gc_d_k;
  cfg.d_v = o.gc_d_v;
  cfg.d_hid = o.gc_d_hid;
  cfg.eps = o.eps;
  if (cfg.d_seq < 1 || cfg.d_model < 1 || cfg.d_k < 1 || cfg.d_v < 1 || cfg.d_hid < 1 || !(cfg.eps > 0) ||
      !(o.tol > 0))
    throw ValidationError("gradcheck dimensions, eps and tol must be positive");
  json reports = json::array();
  bool pass = true;
  for (auto op : ops) {
    const auto r = check(op, cfg, o.seed, o.tol);
    pass = pass && r.pass;
    reports.push_back(report_json(r));
  }
  json j;
  j["pass"] = pass;
  j["reports"] = std::move(reports);
  emit(o.out, j.dump(1) + "\n", out);
  return pass ? 0 : 1;
}

int cmd_demo(const Options& o, std::ostream& out) {
  const auto cfg = layer_config(o);
  const auto pairs = parse_pairs_jsonl(read_file(o.pairs));
  const TfIdfModel tfidf = o.tfidf.empty() ? TfIdfModel::fit(corpus_of(pairs)) : TfIdfModel::deserialize(read_file(o.tfidf));
  const auto files = run_demo(pairs, tfidf, cfg, o.seed, o.out);
  for (const auto& f : files) out << f.json.string() << "\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  o.seed = default_seed();

  CLI::App app{"Dependency-calibrated attention and adaptive fusion toolkit"};
  app.name("dafa");
  app.require_subcommand(1);

  auto* tfidf = app.add_subcommand("tfidf", "tf-idf statistics");
  tfidf->require_subcommand(1);
  auto* fit = tfidf->add_subcommand("fit", "Fit document frequencies on a CoNLL-U corpus");
  fit->add_option("--corpus", o.corpus, "CoNLL-U file; each sentence is one document")->required();
  fit->add_option("--out", o.out, "Output JSON (stdout if omitted)");

  auto* matrix = app.add_subcommand("matrix", "Dependency matrices M, S and M_F per sentence pair");
  matrix->add_option("--pairs", o.pairs, "Sentence pairs (JSON Lines)")->required();
  matrix->add_option("--tfidf", o.tfidf, "Fitted tf-idf model JSON")->required();
  matrix->add_option("--out", o.out, "Output JSON Lines (stdout if omitted)");
  add_dep_flags(matrix, o);

  auto* attend = app.add_subcommand("attend", "Semantic and dependency-calibrated attention weights for one pair");
  attend->add_option("--pair", o.pair, "JSON Lines file; the first record is used unless --id is given")->required();
  attend->add_option("--id", o.pair_id, "Record id to select");
  attend->add_option("--config", o.config, "JSON with any of d_model, heads, d_k, d_v, d_hid, theta, alpha, nu");
  attend->add_option("--tfidf", o.tfidf, "Fitted tf-idf model (default: fit on the pair itself)");
  attend->add_option("--seed", o.seed, "Seed for embeddings and projections (env DAFA_SEED)")->capture_default_str();
  attend->add_option("--out", o.out, "Output JSON (stdout if omitted)");
  add_layer_flags(attend, o);

  auto* fuse_cmd = app.add_subcommand("fuse", "Adaptive fusion of given Sem/Dep signals");
  fuse_cmd->add_option("--signals", o.signals, "JSON {\"sem\": rows, \"dep\": rows}")->required();
  fuse_cmd->add_option("--params", o.params, "Fusion params JSON file, or an integer seed")->required();
  fuse_cmd->add_option("--d-hid", o.d_hid, "Hidden size when --params is a seed")->capture_default_str();
  fuse_cmd->add_option("--out", o.out, "Output JSON (stdout if omitted)");

  auto* grad = app.add_subcommand("gradcheck", "Compare analytic gradients with central differences");
  grad->add_option("--op", o.op, "fuse | attend | sem_attention | dep_attention")
      ->check(CLI::IsMember({"fuse", "attend", "sem_attention", "dep_attention"}))
      ->capture_default_str();
  grad->add_option("--seed", o.seed, "Seed for inputs and parameters (env DAFA_SEED)")->capture_default_str();
  grad->add_option("--tol", o.tol, "Relative error tolerance")->capture_default_str();
  grad->add_option("--eps", o.eps, "Finite-difference step")->capture_default_str();
  grad->add_option("--d-seq", o.gc_d_seq, "Sequence length")->capture_default_str();
  grad->add_option("--d-model", o.gc_d_model, "Input width (attention)")->capture_default_str();
  grad->add_option("--d-k", o.gc_d_k, "Query/key width (attention)")->capture_default_str();
  grad->add_option("--d-v", o.gc_d_v, "Value width")->capture_default_str();
  grad->add_option("--d-hid", o.gc_d_hid, "Fusion hidden size")->capture_default_str();
  grad->add_option("--out", o.out, "Report JSON (stdout if omitted)");

  auto* demo = app.add_subcommand("demo", "Full layer per pair; writes JSON outputs and CSV heatmaps");
  demo->add_option("--pairs", o.pairs, "Sentence pairs (JSON Lines)")->required();
  demo->add_option("--tfidf", o.tfidf, "Fitted tf-idf model (default: fit on the pairs)");
  demo->add_option("--seed", o.seed, "Seed for embeddings and parameters (env DAFA_SEED)")->capture_default_str();
  demo->add_option("--out", o.out, "Output directory")->required();
  add_layer_flags(demo, o);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (fit->parsed()) return cmd_tfidf_fit(o, out);
    if (matrix->parsed()) return cmd_matrix(o, out);
    if (attend->parsed()) return cmd_attend(o, out);
    if (fuse_cmd->parsed()) return cmd_fuse(o, out);
    if (grad->parsed()) return cmd_gradcheck(o, out);
    if (demo->parsed()) return cmd_demo(o, out);
  } catch (const ValidationError& e) {
    err << "dafa: invalid configuration: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "dafa: " << e.what() << "\n";
    return 2;
  }
  err << "dafa: no subcommand\n";
  return 2;
}

}  // namespace dafa::cli
