// Copyright 2026 The Prosody Bench Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "prosody/cli_report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "prosody/audio_io.hpp"
#include "prosody/error.hpp"

namespace prosody {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

const char* const kToolVersion = "0.1.0";

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) fail(ErrorKind::ConfigError, where + " must be a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.count(key)) fail(ErrorKind::ConfigError, "unknown config key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& target) {
  if (j.contains(key)) target = j.at(key).get<T>();
}

std::filesystem::path resolve_path(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::string fmt(double v, const char* spec = "%.4f") {
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string file_safe(const std::string& s) {
  std::string out = s;
  for (char& c : out) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  }
  return out;
}

std::string svg_open(int w, int h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) + "\" height=\"" +
         std::to_string(h) + "\" viewBox=\"0 0 " + std::to_string(w) + " " + std::to_string(h) +
         "\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

std::string text(double x, double y, const std::string& s, const char* anchor = "middle", int size = 12) {
  return "<text x=\"" + fmt(x, "%.1f") + "\" y=\"" + fmt(y, "%.1f") + "\" text-anchor=\"" + anchor +
         "\" font-size=\"" + std::to_string(size) + "\">" + xml_escape(s) + "</text>\n";
}

std::string rect(double x, double y, double w, double h, const std::string& fill) {
  return "<rect x=\"" + fmt(x, "%.1f") + "\" y=\"" + fmt(y, "%.1f") + "\" width=\"" + fmt(w, "%.1f") +
         "\" height=\"" + fmt(h, "%.1f") + "\" fill=\"" + fill + "\"/>\n";
}

std::vector<std::filesystem::path> manifest_paths(const ExperimentConfig& cfg) {
  if (!cfg.manifests.empty()) return cfg.manifests;
  if (cfg.synth) {
    std::vector<std::filesystem::path> out;
    for (const auto& l : cfg.synth->languages) out.push_back(cfg.output_dir / "corpus" / l.name / "manifest.json");
    return out;
  }
  fail(ErrorKind::ConfigError, "config names neither manifests nor a synth spec");
}

AudioClip load_canonical(const CorpusManifest& m, const ClipEntry& clip, int rate) {
  const auto path = m.resolve(clip);
  if (!std::filesystem::exists(path)) fail(ErrorKind::MissingInput, "audio file not found: " + path.string());
  AudioClip a = load_wav(path, parse_channel(clip.channel));
  return a.sample_rate() == rate ? a : resample(a, rate);
}

std::filesystem::path ipu_relpath(const CorpusManifest& m, const ClipEntry& clip) {
  return std::filesystem::path("ipus") / file_safe(m.corpus_name) / (clip_id_of(clip) + ".csv");
}

SpeakerMeta speaker_for(const CorpusManifest& m, const ClipEntry& clip) {
  SpeakerMeta s = m.speaker(clip.speaker_id);
  if (s.language.empty()) s.language = m.language;
  return s;
}

void write_run_meta(const std::string& verb, const ExperimentConfig& cfg, OutputWriter& out) {
  const std::string canonical = config_to_json(cfg);
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical)));
  ojson j;
  j["command"] = verb;
  j["tool_version"] = kToolVersion;
  j["config_hash"] = std::string("fnv1a64:") + hash;
  j["seed"] = cfg.seed;
  j["schema_version"] = cfg.schema_version;
  j["model"] = to_string(cfg.model.kind);
  j["mode"] = cfg.mode;
  j["artifacts"] = out.written();
  j["config"] = ojson::parse(canonical);
  out.write("run_meta.json", j.dump(2) + "\n");
}

void eval_reports(const std::string& mode, const std::vector<MetricsReport>& reports, OutputWriter& out) {
  std::vector<std::string> scopes;
  std::vector<double> acc, f1;
  std::string summary = "mode,scope,model,effective_k,accuracy_mean,accuracy_std,f1_mean,f1_std,macro_f1_mean,"
                        "speaker_accuracy_mean,speaker_f1_mean\n";
  for (const auto& r : reports) {
    const std::string stem = "eval/" + mode + "_" + file_safe(r.scope);
    out.write(stem + ".json", report_to_json(r));
    out.write(stem + ".csv", report_to_csv(r));
    scopes.push_back(r.scope);
    acc.push_back(r.accuracy.mean);
    f1.push_back(r.f1.mean);
    summary += mode + "," + r.scope + "," + to_string(r.model) + "," + std::to_string(r.effective_k) + "," +
               fmt(r.accuracy.mean, "%.6f") + "," + fmt(r.accuracy.std, "%.6f") + "," + fmt(r.f1.mean, "%.6f") + "," +
               fmt(r.f1.std, "%.6f") + "," + fmt(r.macro_f1.mean, "%.6f") + "," +
               fmt(r.speaker_accuracy.mean, "%.6f") + "," + fmt(r.speaker_f1.mean, "%.6f") + "\n";

    const std::string cm_stem = "figures/eval_" + mode + "_cm_" + file_safe(r.scope);
    out.write(cm_stem + ".svg", svg_confusion("Confusion matrix, " + r.scope + " (" + mode + ")", r.total_cm));
    out.write(cm_stem + ".csv", "truth,pred_ASD,pred_TD\nASD," + std::to_string(r.total_cm.tp) + "," +
                                    std::to_string(r.total_cm.fn) + "\nTD," + std::to_string(r.total_cm.fp) + "," +
                                    std::to_string(r.total_cm.tn) + "\n");
  }
  out.write("eval/" + mode + "_summary.csv", summary);
  std::string twin = "scope,accuracy,f1\n";
  for (std::size_t i = 0; i < scopes.size(); ++i) twin += scopes[i] + "," + fmt(acc[i]) + "," + fmt(f1[i]) + "\n";
  out.write("figures/eval_" + mode + "_metrics.svg",
            svg_metric_bars("Accuracy and F1 (" + mode + ", " + (reports.empty() ? "" : to_string(reports[0].model)) + ")",
                            scopes, acc, f1));
  out.write("figures/eval_" + mode + "_metrics.csv", twin);
}

void run_eval_mode(const std::string& mode, const FeatureTable& table, const ExperimentConfig& cfg,
                   OutputWriter& out) {
  std::vector<MetricsReport> reports;
  if (mode == "within") {
    for (const auto& lang : table.languages()) {
      reports.push_back(run_within_language(table, lang, cfg.model, cfg.nominal_k, cfg.seed));
    }
  } else if (mode == "pooled") {
    reports.push_back(run_pooled(table, cfg.model, cfg.nominal_k, cfg.seed));
  } else {
    reports = run_loco(table, cfg.model, cfg.seed);
  }
  eval_reports(mode, reports, out);
}

void check_mode_preconditions(const std::string& mode, const FeatureTable& table) {
  if (table.empty()) fail(ErrorKind::EmptyTable, "feature table has no rows");
  if (mode == "loco" && table.languages().size() < 2) {
    fail(ErrorKind::ConfigError, "mode loco needs at least 2 languages, table has " +
                                     std::to_string(table.languages().size()));
  }
}

}  // namespace

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  try {
    const json j = json::parse(text);
    reject_unknown(j,
                   {"manifests", "synth", "table", "segmenter", "extractor", "sample_rate", "schema_version", "model",
                    "forest", "boosted", "cart", "nominal_k", "seed", "mode", "importance", "output_dir"},
                   "config");
    if (j.contains("manifests")) {
      for (const auto& m : j["manifests"]) cfg.manifests.push_back(resolve_path(base_dir, m.get<std::string>()));
    }
    if (j.contains("synth")) cfg.synth = synth_spec_from_json(j["synth"].dump());
    if (j.contains("table")) cfg.table = resolve_path(base_dir, j["table"].get<std::string>());
    if (j.contains("output_dir")) cfg.output_dir = resolve_path(base_dir, j["output_dir"].get<std::string>());
    read(j, "sample_rate", cfg.sample_rate);
    read(j, "schema_version", cfg.schema_version);
    read(j, "nominal_k", cfg.nominal_k);
    read(j, "seed", cfg.seed);
    read(j, "mode", cfg.mode);
    if (j.contains("model")) cfg.model.kind = parse_model_kind(j["model"].get<std::string>());

    if (j.contains("segmenter")) {
      const auto& s = j["segmenter"];
      reject_unknown(s,
                     {"frame_len_ms", "hop_ms", "pause_threshold_ms", "min_ipu_duration_ms", "threshold_mode",
                      "fixed_db", "percentile", "margin_db", "smoothing_frames"},
                     "segmenter");
      auto& c = cfg.segmenter;
      read(s, "frame_len_ms", c.frame_len_ms);
      read(s, "hop_ms", c.hop_ms);
      read(s, "pause_threshold_ms", c.pause_threshold_ms);
      read(s, "min_ipu_duration_ms", c.min_ipu_duration_ms);
      read(s, "smoothing_frames", c.smoothing_frames);
      read(s, "fixed_db", c.threshold.fixed_db);
      read(s, "percentile", c.threshold.percentile);
      read(s, "margin_db", c.threshold.margin_db);
      if (s.contains("threshold_mode")) {
        const auto mode = s["threshold_mode"].get<std::string>();
        if (mode == "fixed") {
          c.threshold.kind = ThresholdMode::Kind::FixedDb;
        } else if (mode == "adaptive") {
          c.threshold.kind = ThresholdMode::Kind::AdaptivePercentile;
        } else {
          fail(ErrorKind::ConfigError, "threshold_mode must be 'fixed' or 'adaptive'");
        }
      }
    }
    if (j.contains("extractor")) {
      const auto& e = j["extractor"];
      reject_unknown(e,
                     {"hop_ms", "pitch_window_ms", "spectral_window_ms", "f0_min_hz", "f0_max_hz",
                      "voicing_threshold", "lpc_order", "formant_rate"},
                     "extractor");
      auto& c = cfg.extractor;
      read(e, "hop_ms", c.hop_ms);
      read(e, "pitch_window_ms", c.pitch_window_ms);
      read(e, "spectral_window_ms", c.spectral_window_ms);
      read(e, "f0_min_hz", c.f0_min_hz);
      read(e, "f0_max_hz", c.f0_max_hz);
      read(e, "voicing_threshold", c.voicing_threshold);
      read(e, "lpc_order", c.lpc_order);
      read(e, "formant_rate", c.formant_rate);
    }
    if (j.contains("forest")) {
      const auto& f = j["forest"];
      reject_unknown(f, {"n_trees", "max_depth", "min_leaf", "features_per_split", "bootstrap", "class_weighting"},
                     "forest");
      auto& c = cfg.model.forest;
      read(f, "n_trees", c.n_trees);
      read(f, "max_depth", c.max_depth);
      read(f, "min_leaf", c.min_leaf);
      read(f, "features_per_split", c.features_per_split);
      read(f, "bootstrap", c.bootstrap);
      read(f, "class_weighting", c.class_weighting);
    }
    if (j.contains("boosted")) {
      const auto& b = j["boosted"];
      reject_unknown(b, {"n_rounds", "learning_rate", "max_depth", "l2_lambda", "min_child_weight", "class_weighting"},
                     "boosted");
      auto& c = cfg.model.boost;
      read(b, "n_rounds", c.n_rounds);
      read(b, "learning_rate", c.learning_rate);
      read(b, "max_depth", c.max_depth);
      read(b, "l2_lambda", c.l2_lambda);
      read(b, "min_child_weight", c.min_child_weight);
      read(b, "class_weighting", c.class_weighting);
    }
    if (j.contains("cart")) {
      const auto& t = j["cart"];
      reject_unknown(t, {"max_depth", "min_leaf"}, "cart");
      read(t, "max_depth", cfg.model.cart.max_depth);
      read(t, "min_leaf", cfg.model.cart.min_leaf);
    }
    if (j.contains("importance")) {
      const auto& im = j["importance"];
      reject_unknown(im, {"per_method_cutoff", "n_repeats", "shap_max_rows", "scopes"}, "importance");
      read(im, "per_method_cutoff", cfg.importance.per_method_cutoff);
      read(im, "n_repeats", cfg.importance.n_repeats);
      read(im, "shap_max_rows", cfg.importance.shap_max_rows);
      read(im, "scopes", cfg.importance_scopes);
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::ConfigError, std::string("config: ") + e.what());
  }

  // Validation happens here so no command starts computing on a bad config.
  cfg.segmenter.validate();
  if (cfg.schema_version != FeatureSchema::standard().version()) {
    fail(ErrorKind::ConfigError, "unsupported schema_version '" + cfg.schema_version + "'");
  }
  if (cfg.mode != "within" && cfg.mode != "pooled" && cfg.mode != "loco" && cfg.mode != "all") {
    fail(ErrorKind::ConfigError, "mode must be one of within, pooled, loco, all");
  }
  if (cfg.nominal_k < 2) fail(ErrorKind::ConfigError, "nominal_k must be at least 2");
  if (cfg.sample_rate < 8000) fail(ErrorKind::ConfigError, "sample_rate must be at least 8000");
  if (cfg.model.forest.n_trees < 1 || cfg.model.forest.min_leaf < 1) fail(ErrorKind::ConfigError, "invalid forest settings");
  if (cfg.model.boost.n_rounds < 0 || !(cfg.model.boost.learning_rate > 0.0) || cfg.model.boost.l2_lambda < 0.0 ||
      cfg.model.boost.min_child_weight < 0.0) {
    fail(ErrorKind::ConfigError, "invalid boosted settings");
  }
  if (cfg.importance.n_repeats < 1) fail(ErrorKind::ConfigError, "importance.n_repeats must be at least 1");
  if (cfg.extractor.f0_min_hz <= 0.0 || cfg.extractor.f0_max_hz <= cfg.extractor.f0_min_hz) {
    fail(ErrorKind::ConfigError, "extractor F0 range is invalid");
  }
  cfg.importance.model = cfg.model;
  cfg.importance.nominal_k = cfg.nominal_k;
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::MissingInput, "cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

std::string config_to_json(const ExperimentConfig& cfg) {
  ojson j;
  j["manifests"] = ojson::array();
  for (const auto& m : cfg.manifests) j["manifests"].push_back(m.filename().string());
  if (cfg.synth) {
    SynthSpec s = *cfg.synth;
    s.seed = cfg.seed;
    j["synth"] = ojson::parse(synth_spec_to_json(s));
  }
  j["table"] = cfg.table.empty() ? "" : cfg.table.filename().string();
  const auto& sg = cfg.segmenter;
  j["segmenter"] = {{"frame_len_ms", sg.frame_len_ms},
                    {"hop_ms", sg.hop_ms},
                    {"pause_threshold_ms", sg.pause_threshold_ms},
                    {"min_ipu_duration_ms", sg.min_ipu_duration_ms},
                    {"threshold_mode", sg.threshold.kind == ThresholdMode::Kind::FixedDb ? "fixed" : "adaptive"},
                    {"fixed_db", sg.threshold.fixed_db},
                    {"percentile", sg.threshold.percentile},
                    {"margin_db", sg.threshold.margin_db},
                    {"smoothing_frames", sg.smoothing_frames}};
  const auto& ex = cfg.extractor;
  j["extractor"] = {{"hop_ms", ex.hop_ms},
                    {"pitch_window_ms", ex.pitch_window_ms},
                    {"spectral_window_ms", ex.spectral_window_ms},
                    {"f0_min_hz", ex.f0_min_hz},
                    {"f0_max_hz", ex.f0_max_hz},
                    {"voicing_threshold", ex.voicing_threshold},
                    {"lpc_order", ex.lpc_order},
                    {"formant_rate", ex.formant_rate}};
  j["sample_rate"] = cfg.sample_rate;
  j["schema_version"] = cfg.schema_version;
  j["model"] = to_string(cfg.model.kind);
  const auto& f = cfg.model.forest;
  j["forest"] = {{"n_trees", f.n_trees},
                 {"max_depth", f.max_depth},
                 {"min_leaf", f.min_leaf},
                 {"features_per_split", f.features_per_split},
                 {"bootstrap", f.bootstrap},
                 {"class_weighting", f.class_weighting}};
  const auto& b = cfg.model.boost;
  j["boosted"] = {{"n_rounds", b.n_rounds},
                  {"learning_rate", b.learning_rate},
                  {"max_depth", b.max_depth},
                  {"l2_lambda", b.l2_lambda},
                  {"min_child_weight", b.min_child_weight},
                  {"class_weighting", b.class_weighting}};
  j["cart"] = {{"max_depth", cfg.model.cart.max_depth}, {"min_leaf", cfg.model.cart.min_leaf}};
  j["nominal_k"] = cfg.nominal_k;
  j["seed"] = cfg.seed;
  j["mode"] = cfg.mode;
  j["importance"] = {{"per_method_cutoff", cfg.importance.per_method_cutoff},
                     {"n_repeats", cfg.importance.n_repeats},
                     {"shap_max_rows", cfg.importance.shap_max_rows},
                     {"scopes", cfg.importance_scopes}};
  return j.dump();
}

OutputWriter::OutputWriter(std::filesystem::path root) : root_(std::move(root)) {}

void OutputWriter::write(const std::filesystem::path& relative, std::string_view content) {
  const auto path = root_ / relative;
  std::error_code ec;
  std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorKind::IoError, "cannot write " + path.string());
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!f) fail(ErrorKind::IoError, "short write to " + path.string());
  const std::string rel = relative.generic_string();
  if (std::find(written_.begin(), written_.end(), rel) == written_.end()) written_.push_back(rel);
}

std::string svg_metric_bars(const std::string& title, std::span<const std::string> scopes,
                            std::span<const double> accuracy, std::span<const double> f1) {
  const int group_w = 90;
  const int left = 60, top = 40, plot_h = 220;
  const int w = left + 20 + group_w * static_cast<int>(std::max<std::size_t>(scopes.size(), 1));
  const int h = top + plot_h + 70;
  std::string s = svg_open(w, h);
  s += text(w / 2.0, 22, title, "middle", 14);
  for (int i = 0; i <= 4; ++i) {
    const double y = top + plot_h - plot_h * i / 4.0;
    s += "<line x1=\"" + std::to_string(left) + "\" x2=\"" + std::to_string(w - 10) + "\" y1=\"" + fmt(y, "%.1f") +
         "\" y2=\"" + fmt(y, "%.1f") + "\" stroke=\"#dddddd\"/>\n";
    s += text(left - 6, y + 4, fmt(i / 4.0, "%.2f"), "end", 10);
  }
  for (std::size_t i = 0; i < scopes.size(); ++i) {
    const double x0 = left + 10 + group_w * static_cast<double>(i);
    const double vals[2] = {accuracy[i], f1[i]};
    const char* colours[2] = {"#4C72B0", "#DD8452"};
    for (int k = 0; k < 2; ++k) {
      const double v = std::clamp(vals[k], 0.0, 1.0);
      const double bh = plot_h * v;
      const double x = x0 + 32.0 * k;
      s += rect(x, top + plot_h - bh, 30, bh, colours[k]);
      s += text(x + 15, top + plot_h - bh - 4, fmt(vals[k], "%.2f"), "middle", 10);
    }
    s += text(x0 + 31, top + plot_h + 16, scopes[i], "middle", 11);
  }
  s += rect(left, h - 28, 12, 12, "#4C72B0") + text(left + 16, h - 18, "Accuracy", "start", 11);
  s += rect(left + 90, h - 28, 12, 12, "#DD8452") + text(left + 106, h - 18, "F1 (ASD)", "start", 11);
  s += "</svg>\n";
  return s;
}

std::string svg_confusion(const std::string& title, const Confusion& cm) {
  const int cell = 90, left = 90, top = 60;
  std::string s = svg_open(left + 2 * cell + 30, top + 2 * cell + 40);
  s += text((left + 2 * cell + 30) / 2.0, 22, title, "middle", 13);
  s += text(left + cell, top - 22, "Predicted", "middle", 11);
  s += text(left + cell / 2.0, top - 6, "ASD", "middle", 11);
  s += text(left + 1.5 * cell, top - 6, "TD", "middle", 11);
  s += text(left - 8, top + cell / 2.0 + 4, "ASD", "end", 11);
  s += text(left - 8, top + 1.5 * cell + 4, "TD", "end", 11);
  const std::size_t cells[2][2] = {{cm.tp, cm.fn}, {cm.fp, cm.tn}};
  for (int r = 0; r < 2; ++r) {
    const double row_total = static_cast<double>(cells[r][0] + cells[r][1]);
    for (int c = 0; c < 2; ++c) {
      const double frac = row_total > 0 ? static_cast<double>(cells[r][c]) / row_total : 0.0;
      const int shade = static_cast<int>(std::lround(255 - 180 * frac));
      char fill[16];
      std::snprintf(fill, sizeof fill, "#%02x%02xff", shade, shade);
      s += rect(left + c * cell, top + r * cell, cell, cell, fill);
      s += text(left + (c + 0.5) * cell, top + (r + 0.5) * cell, std::to_string(cells[r][c]), "middle", 14);
      s += text(left + (c + 0.5) * cell, top + (r + 0.5) * cell + 18, fmt(100.0 * frac, "%.1f") + "%", "middle", 10);
    }
  }
  s += text(20, top + cell + 4, "Truth", "middle", 11);
  s += "</svg>\n";
  return s;
}

std::string svg_importance(const std::string& title, std::span<const std::string> names,
                           std::span<const double> values) {
  const int left = 260, bar_h = 20, top = 40, plot_w = 300;
  const int h = top + bar_h * static_cast<int>(names.size()) + 30;
  double vmax = 0.0;
  for (double v : values) vmax = std::max(vmax, v);
  std::string s = svg_open(left + plot_w + 60, h);
  s += text((left + plot_w + 60) / 2.0, 22, title, "middle", 13);
  for (std::size_t i = 0; i < names.size(); ++i) {
    const double y = top + bar_h * static_cast<double>(i);
    const double bw = vmax > 0 ? plot_w * values[i] / vmax : 0.0;
    s += text(left - 6, y + 14, names[i], "end", 11);
    s += rect(left, y + 3, bw, bar_h - 6, "#55A868");
    s += text(left + bw + 4, y + 14, fmt(values[i], "%.2f"), "start", 10);
  }
  s += "</svg>\n";
  return s;
}

FeatureTable resolve_table(const ExperimentConfig& cfg) {
  const auto path = cfg.table.empty() ? cfg.output_dir / "features" / "table.csv" : cfg.table;
  if (!std::filesystem::exists(path)) fail(ErrorKind::MissingInput, "feature table not found: " + path.string());
  FeatureTable t = load_table(path);
  if (t.schema_version() != cfg.schema_version) {
    fail(ErrorKind::SchemaMismatch, "table schema '" + t.schema_version() + "' does not match config '" +
                                        cfg.schema_version + "'");
  }
  return t;
}

void cmd_segment(const ExperimentConfig& cfg, OutputWriter& out) {
  for (const auto& mpath : manifest_paths(cfg)) {
    const CorpusManifest m = load_manifest(mpath);
    std::string listing = "clip_id,speaker_id,n_ipus\n";
    for (const auto& clip : m.clips) {
      const AudioClip audio = load_canonical(m, clip, cfg.sample_rate);
      auto ipus = segment_ipus(audio, cfg.segmenter, clip_id_of(clip));
      if (!clip.exclude.empty()) ipus = filter_ipus(ipus, clip.exclude);
      out.write(ipu_relpath(m, clip), ipus_to_csv(ipus));
      listing += clip_id_of(clip) + "," + clip.speaker_id + "," + std::to_string(ipus.size()) + "\n";
    }
    out.write(std::filesystem::path("ipus") / file_safe(m.corpus_name) / "index.csv", listing);
  }
}

void cmd_extract(const ExperimentConfig& cfg, OutputWriter& out) {
  const auto& schema = FeatureSchema::standard();
  std::vector<UtteranceRecord> records;
  for (const auto& mpath : manifest_paths(cfg)) {
    const CorpusManifest m = load_manifest(mpath);
    std::vector<AudioClip> audio;
    audio.reserve(m.clips.size());
    std::vector<ExtractionJob> jobs;
    std::vector<std::pair<std::size_t, Ipu>> owners;
    for (const auto& clip : m.clips) {
      const auto ipu_path = out.root() / ipu_relpath(m, clip);
      if (!std::filesystem::exists(ipu_path)) {
        fail(ErrorKind::MissingInput, "IPU file not found (run segment first): " + ipu_path.string());
      }
      audio.push_back(load_canonical(m, clip, cfg.sample_rate));
      for (const Ipu& ipu : load_ipus(ipu_path)) owners.emplace_back(audio.size() - 1, ipu);
    }
    for (const auto& [ci, ipu] : owners) jobs.push_back({&audio[ci], ipu});
    const auto vectors = extract_batch(jobs, schema, cfg.extractor);
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      const ClipEntry& clip = m.clips[owners[i].first];
      UtteranceRecord rec;
      char idx[16];
      std::snprintf(idx, sizeof idx, "_u%02d", owners[i].second.index_in_clip + 1);
      rec.utterance_id = m.corpus_name + ":" + clip_id_of(clip) + idx;
      rec.speaker = speaker_for(m, clip);
      rec.duration_s = owners[i].second.duration();
      rec.features = vectors[i];
      records.push_back(std::move(rec));
    }
  }
  if (records.empty()) fail(ErrorKind::EmptyTable, "no IPUs were found in any clip");
  const FeatureTable table = build_table(records, schema);
  out.write("features/table.csv", table_to_csv(table));
  out.write("features/schema.json", schema.to_json());
}

void cmd_synth(const ExperimentConfig& cfg, OutputWriter& out) {
  if (!cfg.synth) fail(ErrorKind::ConfigError, "synth command needs a 'synth' section in the config");
  SynthSpec spec = *cfg.synth;
  spec.seed = cfg.seed;
  const SynthCorpus corpus = render_synthetic_corpus(spec);
  for (const auto& [rel, clip] : corpus.clips) {
    const auto bytes = encode_wav(clip.samples(), clip.sample_rate(), 16);
    out.write(std::filesystem::path("corpus") / rel,
              std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  }
  for (const auto& m : corpus.manifests) {
    out.write(std::filesystem::path("corpus") / m.corpus_name / "manifest.json", manifest_to_json(m));
  }
  out.write("corpus/ground_truth.json", ground_truth_json(spec));
  out.write("corpus/synth_spec.json", synth_spec_to_json(spec));

  ExperimentConfig local = cfg;
  local.manifests.clear();
  for (const auto& m : corpus.manifests) local.manifests.push_back(out.root() / "corpus" / m.corpus_name / "manifest.json");
  cmd_segment(local, out);
  cmd_extract(local, out);
}

void cmd_eval(const ExperimentConfig& cfg, OutputWriter& out) {
  const FeatureTable table = resolve_table(cfg);
  if (cfg.mode == "all") {
    check_mode_preconditions("within", table);
    run_eval_mode("within", table, cfg, out);
    run_eval_mode("pooled", table, cfg, out);
    if (table.languages().size() >= 2) run_eval_mode("loco", table, cfg, out);
    return;
  }
  check_mode_preconditions(cfg.mode, table);
  run_eval_mode(cfg.mode, table, cfg, out);
}

void cmd_importance(const ExperimentConfig& cfg, OutputWriter& out) {
  const FeatureTable table = resolve_table(cfg);
  if (table.empty()) fail(ErrorKind::EmptyTable, "feature table has no rows");
  std::vector<std::string> scopes = cfg.importance_scopes;
  if (scopes.empty()) {
    scopes = table.languages();
    scopes.push_back("ALL");
  }
  for (const auto& scope : scopes) {
    const FeatureTable sub = scope == "ALL" ? table : table.filter_language(scope);
    if (sub.empty()) fail(ErrorKind::ConfigError, "importance scope '" + scope + "' matches no rows");
    const ImportanceRun run = run_importance(sub, cfg.importance, scope, cfg.seed);
    const std::string stem = "importance/importance_" + file_safe(scope);
    out.write(stem + ".csv", consensus_to_csv(run.table));
    out.write(stem + ".json", consensus_to_json(run.table, run.methods));

    // Figure: the ten best features by average rank, bar = dim + 1 - avg.
    std::vector<std::size_t> order(run.table.rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const auto& ra = run.table.rows[a];
      const auto& rb = run.table.rows[b];
      if (ra.avg_rank != rb.avg_rank) return ra.avg_rank < rb.avg_rank;
      return ra.best_rank < rb.best_rank;
    });
    std::vector<std::string> names;
    std::vector<double> values;
    std::string twin = "feature_name,rank_score,avg_rank,in_top5\n";
    for (std::size_t i = 0; i < std::min<std::size_t>(10, order.size()); ++i) {
      const auto& r = run.table.rows[order[i]];
      names.push_back(r.name + (r.in_top5 ? " *" : ""));
      values.push_back(static_cast<double>(table.dim() + 1) - r.avg_rank);
      twin += r.name + "," + fmt(values.back()) + "," + fmt(r.avg_rank) + "," + (r.in_top5 ? "1" : "0") + "\n";
    }
    const std::string fig = "figures/importance_" + file_safe(scope);
    out.write(fig + ".svg", svg_importance("Consensus importance, " + scope + " (* = top 5)", names, values));
    out.write(fig + ".csv", twin);
  }
}

void cmd_summary(const ExperimentConfig& cfg, OutputWriter& out) {
  const FeatureTable table = resolve_table(cfg);
  const CorpusSummary s = summarize(table);
  out.write("summary/summary.txt", summary_to_text(s));
  out.write("summary/summary.csv", summary_to_csv(s));
}

void cmd_all(const ExperimentConfig& cfg, OutputWriter& out) {
  if (cfg.synth) {
    cmd_synth(cfg, out);
  } else if (cfg.table.empty()) {
    cmd_segment(cfg, out);
    cmd_extract(cfg, out);
  }
  ExperimentConfig all = cfg;
  all.mode = "all";
  cmd_summary(all, out);
  cmd_eval(all, out);
  cmd_importance(all, out);
}

void run_command(const std::string& verb, const ExperimentConfig& cfg) {
  OutputWriter out(cfg.output_dir);
  if (verb == "segment") {
    cmd_segment(cfg, out);
  } else if (verb == "extract") {
    cmd_extract(cfg, out);
  } else if (verb == "synth") {
    cmd_synth(cfg, out);
  } else if (verb == "eval") {
    cmd_eval(cfg, out);
  } else if (verb == "importance") {
    cmd_importance(cfg, out);
  } else if (verb == "summary") {
    cmd_summary(cfg, out);
  } else if (verb == "all") {
    cmd_all(cfg, out);
  } else {
    fail(ErrorKind::ConfigError, "unknown command '" + verb + "'");
  }
  write_run_meta(verb, cfg, out);
}

}  // namespace prosody
