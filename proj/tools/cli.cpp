#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "fgir/annotations.hpp"
#include "fgir/attribute_head.hpp"
#include "fgir/bilinear.hpp"
#include "fgir/container.hpp"
#include "fgir/error.hpp"
#include "fgir/evaluation.hpp"
#include "fgir/parallel.hpp"
#include "fgir/report.hpp"
#include "fgir/retrieval.hpp"
#include "fgir/synth.hpp"

namespace fgir::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kAnnotationsFile = "annotations.csv";
constexpr const char* kVocabFile = "vocab.txt";
constexpr const char* kFeaturesDir = "features";

struct GlobalOptions {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string metric = "euclidean";
  std::string normalize = "on";
  std::string k_list = "1,5,10";
};

std::vector<std::size_t> parse_k_list(const std::string& text) {
  std::vector<std::size_t> ks;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    std::size_t k = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), k);
    if (token.empty() || ec != std::errc() || ptr != token.data() + token.size() || k == 0) {
      throw CLI::ValidationError("--k-list", "'" + text + "' is not a comma-separated list of positive integers");
    }
    ks.push_back(k);
  }
  if (ks.empty()) throw CLI::ValidationError("--k-list", "empty list");
  return ks;
}

MapShape parse_map_shape(const std::string& text) {
  std::vector<std::size_t> dims;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (token.empty() || ec != std::errc() || ptr != token.data() + token.size() || v == 0) {
      throw CLI::ValidationError("--map-shape", "expected h,w,c with positive integers");
    }
    dims.push_back(v);
  }
  if (dims.size() != 3) throw CLI::ValidationError("--map-shape", "expected h,w,c");
  return {dims[0], dims[1], dims[2]};
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "'" + path.string() + "': cannot create file");
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "'" + path.string() + "': write failed");
}

IndexOptions index_options_from(const GlobalOptions& g, bool clamp) {
  return IndexOptions{parse_metric(g.metric), g.normalize == "on", clamp};
}

GalleryIndex load_index(const fs::path& dir) {
  const auto container = load_container(dir);
  const auto& meta = container.metadata;
  if (!meta.contains("index") || !meta["index"].is_object()) {
    throw Error(ErrorCode::kBadFormat, "'" + dir.string() + "': not an index container");
  }
  const auto& im = meta["index"];
  IndexOptions options;
  try {
    options.metric = parse_metric(im.at("metric").get<std::string>());
    options.normalize = im.at("normalized").get<bool>();
    options.clamp_negative = im.value("clamp_negative", false);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kBadFormat, "'" + dir.string() + "': bad index metadata: " + e.what());
  }
  auto vectors = load_vectors(dir);
  const auto annotations = load_annotations(dir / kAnnotationsFile, dir / kVocabFile);
  std::vector<ItemAnnotation> aligned;
  aligned.reserve(vectors.size());
  for (const auto& v : vectors) {
    const auto* a = annotations.find(v.id());
    if (!a) throw Error(ErrorCode::kMissingId, "'" + dir.string() + "': no annotation for '" + v.id() + "'");
    aligned.push_back(*a);
  }
  return restore_index(std::move(vectors), std::move(aligned), options);
}

json train_config_json(const TrainConfig& cfg) {
  return {{"epochs", cfg.epochs},         {"batch_size", cfg.batch_size},
          {"learning_rate", cfg.learning_rate}, {"adam_beta1", cfg.adam_beta1},
          {"adam_beta2", cfg.adam_beta2}, {"adam_eps", cfg.adam_eps},
          {"seed", cfg.seed},             {"shuffle", cfg.shuffle}};
}

AttributeHead load_head(const fs::path& dir) {
  const auto c = load_container(dir);
  const auto& w = c.tensor("weights");
  const auto& b = c.tensor("bias");
  if (w.shape.size() != 2 || b.shape.size() != 1 || b.shape[0] != w.shape[0]) {
    throw Error(ErrorCode::kShapeMismatch, "'" + dir.string() + "': head tensors must be weights [K, d] and bias [K]");
  }
  return AttributeHead(w.shape[1], w.shape[0], std::vector<double>(w.data.begin(), w.data.end()),
                       std::vector<double>(b.data.begin(), b.data.end()));
}

ProjectionBasis load_basis(const fs::path& dir) {
  const auto c = load_container(dir);
  const auto& mean = c.tensor("mean");
  const auto& matrix = c.tensor("matrix");
  if (mean.shape.size() != 1 || matrix.shape.size() != 2 || matrix.shape[0] != mean.shape[0]) {
    throw Error(ErrorCode::kShapeMismatch, "'" + dir.string() + "': basis tensors must be mean [c] and matrix [c, p]");
  }
  FitMeta meta;
  if (c.metadata.contains("fit_meta")) {
    const auto& fm = c.metadata["fit_meta"];
    meta.iterations = fm.value("iterations", std::size_t{0});
    meta.converged = fm.value("converged", false);
    meta.seed = fm.value("seed", std::uint64_t{0});
    meta.samples = fm.value("samples", std::size_t{0});
  }
  return ProjectionBasis(matrix.shape[0], matrix.shape[1],
                         std::vector<double>(mean.data.begin(), mean.data.end()),
                         std::vector<double>(matrix.data.begin(), matrix.data.end()), meta);
}

AnnotationSet annotations_or_sidecar(const std::string& csv, const std::string& vocab,
                                     const fs::path& index_dir) {
  if (!csv.empty()) {
    return load_annotations(csv, vocab.empty() ? fs::path(csv).parent_path() / kVocabFile : fs::path(vocab));
  }
  return load_annotations(index_dir / kAnnotationsFile, index_dir / kVocabFile);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Instance-level image retrieval over exported CNN features", "fgir"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "key=value file of option overrides");

  GlobalOptions g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker thread cap")->check(CLI::Range(1u, 1024u))->capture_default_str();
  app.add_option("--metric", g.metric, "Retrieval metric")
      ->check(CLI::IsMember({"euclidean", "histint"}))
      ->capture_default_str();
  app.add_option("--normalize", g.normalize, "L2-normalize gallery and queries")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  app.add_option("--k-list", g.k_list, "Comma-separated k values for evaluation")->capture_default_str();

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic feature + annotation dataset");
  SynthConfig sc;
  std::string synth_out, map_shape;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--instances", sc.n_instances)->capture_default_str();
  synth->add_option("--copies", sc.copies_per_instance)->capture_default_str();
  synth->add_option("--dim", sc.dim)->capture_default_str();
  synth->add_option("--map-shape", map_shape, "Generate h,w,c spatial maps instead of vectors");
  synth->add_option("--vocab", sc.vocab_size, "Attribute vocabulary size K")->capture_default_str();
  synth->add_option("--attrs-per-instance", sc.attrs_per_instance)->capture_default_str();
  synth->add_option("--sigma", sc.noise_sigma, "Per-copy Gaussian noise")->capture_default_str();
  synth->add_option("--group-size", sc.instances_per_group, "Instances per coarse group (0: none)")
      ->capture_default_str();

  // train-head
  auto* train = app.add_subcommand("train-head", "Train an attribute head with the ranking loss");
  TrainConfig tc;
  std::string train_features, train_annotations, train_vocab, train_out;
  bool no_shuffle = false;
  train->add_option("--features", train_features)->required();
  train->add_option("--annotations", train_annotations)->required();
  train->add_option("--vocab", train_vocab, "Defaults to vocab.txt beside the annotations");
  train->add_option("--out", train_out)->required();
  train->add_option("--epochs", tc.epochs)->capture_default_str();
  train->add_option("--batch-size", tc.batch_size)->capture_default_str();
  train->add_option("--lr", tc.learning_rate)->capture_default_str();
  train->add_option("--beta1", tc.adam_beta1)->capture_default_str();
  train->add_option("--beta2", tc.adam_beta2)->capture_default_str();
  train->add_option("--eps", tc.adam_eps)->capture_default_str();
  train->add_flag("--no-shuffle", no_shuffle);

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "Emit attribute-score (prob) features from a head");
  std::string predict_head, predict_features, predict_out;
  predict_cmd->add_option("--head", predict_head)->required();
  predict_cmd->add_option("--features", predict_features)->required();
  predict_cmd->add_option("--out", predict_out)->required();

  // fit-projection
  auto* fit = app.add_subcommand("fit-projection", "Fit the whitening + ICA projection basis");
  IcaConfig ic;
  std::size_t fit_dims = 20;
  std::string fit_maps, fit_out;
  fit->add_option("--maps", fit_maps)->required();
  fit->add_option("--dims", fit_dims, "Projected dimensionality p")->capture_default_str();
  fit->add_option("--max-iters", ic.max_iters)->capture_default_str();
  fit->add_option("--tol", ic.tol)->capture_default_str();
  fit->add_option("--sample-cap", ic.sample_cap)->capture_default_str();
  fit->add_option("--out", fit_out)->required();

  // pool
  auto* pool = app.add_subcommand("pool", "Bilinear-pool spatial maps with a projection basis");
  std::string pool_maps, pool_basis, pool_out;
  pool->add_option("--maps", pool_maps)->required();
  pool->add_option("--basis", pool_basis)->required();
  pool->add_option("--out", pool_out)->required();

  // index-build
  auto* index_cmd = app.add_subcommand("index-build", "Build a gallery index");
  std::string idx_features, idx_annotations, idx_vocab, idx_out;
  bool clamp = false;
  index_cmd->add_option("--features", idx_features)->required();
  index_cmd->add_option("--annotations", idx_annotations)->required();
  index_cmd->add_option("--vocab", idx_vocab, "Defaults to vocab.txt beside the annotations");
  index_cmd->add_option("--out", idx_out)->required();
  index_cmd->add_flag("--clamp-negative", clamp, "Clamp negative components after normalization");

  // query
  auto* query = app.add_subcommand("query", "Top-k retrieval for one or all query vectors");
  std::string q_index, q_features, q_id, q_out;
  std::size_t q_k = 10;
  bool q_exclude = false;
  query->add_option("--index", q_index)->required();
  query->add_option("--features", q_features)->required();
  query->add_option("--query-id", q_id, "Single query id (otherwise every query is run)");
  query->add_option("--k", q_k)->check(CLI::PositiveNumber)->capture_default_str();
  query->add_flag("--exclude-self", q_exclude, "Drop the gallery item whose id equals the query id");
  query->add_option("--out", q_out, "CSV file (single) or directory (batch); stdout when omitted for single");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Precision / IoU / accuracy report over all queries");
  std::string e_index, e_features, e_annotations, e_vocab, e_out, e_table, e_iou = "all", e_name = "features";
  bool e_exclude = false;
  eval->add_option("--index", e_index)->required();
  eval->add_option("--features", e_features)->required();
  eval->add_option("--annotations", e_annotations, "Query annotations (default: index sidecar)");
  eval->add_option("--vocab", e_vocab);
  eval->add_flag("--exclude-self", e_exclude);
  eval->add_option("--iou-mode", e_iou)->check(CLI::IsMember({"all", "relevant"}))->capture_default_str();
  eval->add_option("--feature-name", e_name, "Provenance label for the report")->capture_default_str();
  eval->add_option("--out", e_out, "Report CSV (k,metric,value)");
  eval->add_option("--table", e_table, "Write the text table here instead of stdout");

  // report-html
  auto* html = app.add_subcommand("report-html", "Static ranked-gallery page from a query CSV");
  std::string h_csv, h_id, h_images, h_out;
  html->add_option("--query-csv", h_csv)->required();
  html->add_option("--query-id", h_id, "Defaults to the CSV file stem");
  html->add_option("--images", h_images, "Directory with <id>.jpg/.jpeg/.png");
  html->add_option("--out", h_out)->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  try {
    const auto ks = parse_k_list(g.k_list);

    if (synth->parsed()) {
      sc.seed = g.seed;
      if (!map_shape.empty()) sc.map_shape = parse_map_shape(map_shape);
      const auto data = synth_generate(sc);
      const fs::path dir(synth_out);
      json meta = {{"generator", "synth"},
                   {"seed", sc.seed},
                   {"instances", sc.n_instances},
                   {"copies", sc.copies_per_instance},
                   {"vocab", sc.vocab_size},
                   {"attrs_per_instance", sc.attrs_per_instance},
                   {"sigma", sc.noise_sigma},
                   {"group_size", sc.instances_per_group}};
      if (const auto* v = std::get_if<std::vector<FeatureVector>>(&data.features)) {
        meta["dim"] = sc.dim;
        save_vectors(dir / kFeaturesDir, *v, meta);
      } else {
        meta["map_shape"] = {sc.map_shape->height, sc.map_shape->width, sc.map_shape->channels};
        save_maps(dir / kFeaturesDir, std::get<std::vector<SpatialFeatureMap>>(data.features), meta);
      }
      save_annotations(dir / kAnnotationsFile, dir / kVocabFile, data.annotations);
      out << "wrote " << data.annotations.size() << " items to " << dir.string() << "\n";
      return kSuccess;
    }

    if (train->parsed()) {
      tc.seed = g.seed;
      tc.shuffle = !no_shuffle;
      const auto features = load_vectors(train_features);
      const auto annotations = annotations_or_sidecar(train_annotations, train_vocab, {});
      const auto labels = annotations.labels();
      const auto result = train_head(features, labels, tc);
      const auto& head = result.head;
      TensorContainer c;
      c.tensors.push_back({"weights", {head.vocab_size(), head.in_dim()},
                           std::vector<float>(head.weights().begin(), head.weights().end())});
      c.tensors.push_back({"bias", {head.vocab_size()},
                           std::vector<float>(head.bias().begin(), head.bias().end())});
      c.metadata = {{"train_config", train_config_json(tc)}, {"loss_history", result.loss_history}};
      save_container(train_out, c);
      out << "epoch,loss\n";
      for (std::size_t e = 0; e < result.loss_history.size(); ++e) {
        out << (e + 1) << ',' << format_real(result.loss_history[e]) << '\n';
      }
      return kSuccess;
    }

    if (predict_cmd->parsed()) {
      const auto head = load_head(predict_head);
      const auto features = load_vectors(predict_features);
      std::vector<FeatureVector> scores(features.size(), FeatureVector("_", {0.0f}));
      parallel_chunks(features.size(), g.threads, [&](std::size_t, std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
          const auto s = predict(head, features[i]);
          scores[i] = FeatureVector(features[i].id(), std::vector<float>(s.begin(), s.end()));
        }
      });
      save_vectors(predict_out, scores, {{"source", "prob"}, {"head", predict_head}});
      out << "wrote " << scores.size() << " score vectors of dimension " << head.vocab_size() << "\n";
      return kSuccess;
    }

    if (fit->parsed()) {
      ic.seed = g.seed;
      const auto maps = load_maps(fit_maps);
      const auto basis = fit_projection(maps, fit_dims, ic);
      TensorContainer c;
      c.tensors.push_back({"mean", {basis.channels()},
                           std::vector<float>(basis.mean().begin(), basis.mean().end())});
      c.tensors.push_back({"matrix", {basis.channels(), basis.dims()},
                           std::vector<float>(basis.matrix().begin(), basis.matrix().end())});
      const auto& fm = basis.fit_meta();
      c.metadata = {{"fit_meta",
                     {{"iterations", fm.iterations},
                      {"converged", fm.converged},
                      {"seed", fm.seed},
                      {"samples", fm.samples},
                      {"max_iters", ic.max_iters},
                      {"tol", ic.tol}}}};
      save_container(fit_out, c);
      out << "basis " << basis.channels() << "x" << basis.dims() << ", ICA "
          << (fm.converged ? "converged" : "did not converge (whitening only)") << " after "
          << fm.iterations << " iterations\n";
      return kSuccess;
    }

    if (pool->parsed()) {
      const auto maps = load_maps(pool_maps);
      const auto basis = load_basis(pool_basis);
      std::vector<FeatureVector> pooled(maps.size(), FeatureVector("_", {0.0f}));
      parallel_chunks(maps.size(), g.threads, [&](std::size_t, std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) pooled[i] = bilinear_pool(maps[i], basis);
      });
      save_vectors(pool_out, pooled, {{"source", "bilinear"}, {"basis", pool_basis}});
      out << "wrote " << pooled.size() << " descriptors of dimension " << pooled.front().dim() << "\n";
      return kSuccess;
    }

    if (index_cmd->parsed()) {
      const auto options = index_options_from(g, clamp);
      auto vectors = load_vectors(idx_features);
      const auto annotations = annotations_or_sidecar(idx_annotations, idx_vocab, {});
      const auto index = build_index(std::move(vectors), annotations.items(), options);
      std::vector<FeatureVector> stored;
      std::vector<ItemAnnotation> items;
      stored.reserve(index.size());
      for (std::size_t i = 0; i < index.size(); ++i) {
        stored.emplace_back(index.id(i), std::vector<float>(index.vector(i).begin(), index.vector(i).end()));
        items.push_back(index.annotation(i));
      }
      const fs::path dir(idx_out);
      save_vectors(dir, stored,
                   {{"index",
                     {{"metric", std::string(to_string(options.metric))},
                      {"normalized", options.normalize},
                      {"clamp_negative", options.clamp_negative}}}});
      save_annotations(dir / kAnnotationsFile, dir / kVocabFile,
                       AnnotationSet(annotations.vocab(), std::move(items)));
      out << "indexed " << index.size() << " items (" << to_string(options.metric)
          << (options.normalize ? ", l2-normalized" : "") << ")\n";
      return kSuccess;
    }

    if (query->parsed()) {
      const auto index = load_index(q_index);
      const auto queries = load_vectors(q_features);
      if (!q_id.empty()) {
        auto it = std::find_if(queries.begin(), queries.end(),
                               [&](const FeatureVector& v) { return v.id() == q_id; });
        if (it == queries.end()) throw Error(ErrorCode::kMissingId, "no query with id '" + q_id + "'");
        const auto exclude = q_exclude ? std::optional<std::string_view>(q_id) : std::nullopt;
        const auto result = query_topk(index, *it, q_k, exclude, g.threads);
        std::ostringstream csv;
        write_query_csv(csv, result);
        if (q_out.empty()) {
          out << csv.str();
        } else {
          write_text_file(q_out, csv.str());
        }
        return kSuccess;
      }
      if (q_out.empty()) throw CLI::RequiredError("--out (directory) for batch queries");
      const auto results = query_batch(index, queries, q_k, q_exclude, g.threads);
      fs::create_directories(q_out);
      for (const auto& r : results) {
        std::ostringstream csv;
        write_query_csv(csv, r);
        write_text_file(fs::path(q_out) / (r.query_id + ".csv"), csv.str());
      }
      out << "wrote " << results.size() << " query results to " << q_out << "\n";
      return kSuccess;
    }

    if (eval->parsed()) {
      const fs::path index_dir(e_index);
      const auto index = load_index(index_dir);
      const auto features = load_vectors(e_features);
      const auto annotations = annotations_or_sidecar(e_annotations, e_vocab, index_dir);
      std::vector<EvalQuery> queries;
      std::vector<std::string> missing;
      queries.reserve(features.size());
      for (const auto& f : features) {
        const auto* a = annotations.find(f.id());
        if (!a) {
          missing.push_back(f.id());
          continue;
        }
        queries.push_back({f, *a});
      }
      if (!missing.empty()) {
        std::string list;
        for (std::size_t i = 0; i < missing.size() && i < 10; ++i) list += (i ? ", " : "") + missing[i];
        throw Error(ErrorCode::kMissingId, "queries without annotations: " + list);
      }
      EvalOptions eo;
      eo.ks = ks;
      eo.exclude_self = e_exclude;
      eo.iou_mode = e_iou == "relevant" ? IouMode::kRelevantHits : IouMode::kAllHits;
      eo.threads = g.threads;
      eo.feature_name = e_name;
      const auto report = evaluate(index, queries, eo);
      std::ostringstream csv;
      write_report_csv(csv, report);
      if (!e_out.empty()) write_text_file(e_out, csv.str());
      const auto table = format_report_table(report);
      if (!e_table.empty()) {
        write_text_file(e_table, table);
      } else {
        out << table;
      }
      if (e_out.empty()) out << csv.str();
      return kSuccess;
    }

    if (html->parsed()) {
      const fs::path csv(h_csv);
      const auto result = read_query_csv(csv, h_id.empty() ? csv.stem().string() : h_id);
      std::optional<fs::path> images;
      if (!h_images.empty()) images = fs::path(h_images);
      write_text_file(h_out, render_html_gallery(result, images));
      out << "wrote " << h_out << "\n";
      return kSuccess;
    }
  } catch (const CLI::Error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    err << "error [io]: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kUsage;
}

}  // namespace fgir::cli
