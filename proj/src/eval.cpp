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

#include "prosody/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "json.hpp"
#include "prosody/error.hpp"
#include "prosody/rng.hpp"
#include "prosody/stats.hpp"

namespace prosody {

namespace {

double safe_div(double num, double den) { return den > 0.0 ? num / den : 0.0; }

double f1_of(double tp, double fp, double fn) {
  const double p = safe_div(tp, tp + fp);
  const double r = safe_div(tp, tp + fn);
  return safe_div(2.0 * p * r, p + r);
}

bool fold_feasible(const std::vector<int>& asd_fold, const std::vector<int>& td_fold, int k) {
  for (int f = 0; f < k; ++f) {
    const auto asd_in = std::count(asd_fold.begin(), asd_fold.end(), f);
    const auto td_in = std::count(td_fold.begin(), td_fold.end(), f);
    if (asd_in == 0 || td_in == 0) return false;
    if (asd_in == static_cast<std::ptrdiff_t>(asd_fold.size())) return false;
    if (td_in == static_cast<std::ptrdiff_t>(td_fold.size())) return false;
  }
  return true;
}

std::vector<double> gather(const FeatureTable& table, std::span<const std::size_t> rows) {
  std::vector<double> out;
  out.reserve(rows.size() * table.dim());
  for (std::size_t r : rows) {
    const auto v = table.row(r);
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

Aggregate aggregate(const std::vector<double>& xs) { return {stats::mean(xs), stats::stddev(xs)}; }

FoldResult score_fold(const FeatureTable& table, const FoldRun& run) {
  FoldResult res;
  res.fold = run.fold;
  res.n_train = run.train_rows.size();
  res.n_test = run.test_rows.size();
  res.weights = run.model.class_weights;

  const auto Xv = gather(table, run.test_rows);
  const auto pred = run.model.predict(MatrixView(Xv, run.test_rows.size(), table.dim()));
  std::vector<int> truth(run.test_rows.size());
  std::map<std::string, std::pair<std::size_t, std::size_t>> votes;  // key -> (asd votes, total)
  std::map<std::string, int> speaker_truth;
  for (std::size_t i = 0; i < run.test_rows.size(); ++i) {
    const RowMeta& m = table.meta(run.test_rows[i]);
    truth[i] = label_of(m.speaker.group);
    const std::string key = speaker_key(m.speaker);
    auto& v = votes[key];
    v.first += static_cast<std::size_t>(pred[i]);
    ++v.second;
    speaker_truth[key] = truth[i];
  }
  res.utterance = compute_metrics(truth, pred);

  std::vector<int> st, sp;
  for (const auto& [key, v] : votes) {
    res.test_speakers.push_back(key);
    st.push_back(speaker_truth[key]);
    sp.push_back(2 * v.first >= v.second ? 1 : 0);
  }
  res.speaker = compute_metrics(st, sp);
  return res;
}

MetricsReport make_report(const FeatureTable& table, const std::vector<FoldRun>& runs, std::string scope,
                          const ModelSpec& spec, int nominal_k, int effective_k, std::uint64_t seed) {
  MetricsReport rep;
  rep.scope = std::move(scope);
  rep.model = spec.kind;
  rep.nominal_k = nominal_k;
  rep.effective_k = effective_k;
  rep.seed = seed;
  std::vector<double> acc, f1, macro, sacc, sf1;
  for (const FoldRun& run : runs) {
    rep.folds.push_back(score_fold(table, run));
    const FoldResult& fr = rep.folds.back();
    acc.push_back(fr.utterance.accuracy);
    f1.push_back(fr.utterance.f1);
    macro.push_back(fr.utterance.macro_f1);
    sacc.push_back(fr.speaker.accuracy);
    sf1.push_back(fr.speaker.f1);
    rep.total_cm += fr.utterance.cm;
  }
  rep.accuracy = aggregate(acc);
  rep.f1 = aggregate(f1);
  rep.macro_f1 = aggregate(macro);
  rep.speaker_accuracy = aggregate(sacc);
  rep.speaker_f1 = aggregate(sf1);
  return rep;
}

nlohmann::ordered_json cm_json(const Confusion& cm) {
  return nlohmann::ordered_json::array({{cm.tp, cm.fn}, {cm.fp, cm.tn}});
}

nlohmann::ordered_json metrics_json(const Metrics& m) {
  return {{"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall},
          {"f1", m.f1},             {"macro_f1", m.macro_f1},   {"confusion_matrix", cm_json(m.cm)}};
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string speaker_key(const SpeakerMeta& s) { return s.language + "/" + s.speaker_id; }

SplitPlan plan_speaker_folds(std::span<const SpeakerMeta> speakers, int nominal_k, std::uint64_t seed) {
  if (nominal_k < 2) fail(ErrorKind::ConfigError, "nominal_k must be at least 2");
  std::vector<std::string> asd, td;
  for (const auto& s : speakers) (s.group == Group::ASD ? asd : td).push_back(speaker_key(s));
  std::sort(asd.begin(), asd.end());
  std::sort(td.begin(), td.end());
  if (std::adjacent_find(asd.begin(), asd.end()) != asd.end() ||
      std::adjacent_find(td.begin(), td.end()) != td.end()) {
    fail(ErrorKind::InvalidArgument, "speaker roster contains duplicates");
  }
  if (asd.size() < 2 || td.size() < 2) {
    fail(ErrorKind::InsufficientSpeakers, "need at least 2 speakers per class, have " + std::to_string(asd.size()) +
                                              " ASD and " + std::to_string(td.size()) + " TD");
  }
  Rng rng(seed);
  rng.shuffle(std::span<std::string>(asd));
  rng.shuffle(std::span<std::string>(td));

  SplitPlan plan;
  plan.nominal_k = nominal_k;
  plan.seed = seed;
  for (int k = nominal_k; k >= 2; --k) {
    std::vector<int> asd_fold(asd.size()), td_fold(td.size());
    int counter = 0;
    for (auto& f : asd_fold) f = counter++ % k;
    for (auto& f : td_fold) f = counter++ % k;
    if (!fold_feasible(asd_fold, td_fold, k)) continue;
    plan.effective_k = k;
    plan.folds.resize(static_cast<std::size_t>(k));
    auto place = [&](const std::vector<std::string>& keys, const std::vector<int>& folds) {
      for (std::size_t i = 0; i < keys.size(); ++i) {
        for (int f = 0; f < k; ++f) {
          auto& fold = plan.folds[static_cast<std::size_t>(f)];
          (f == folds[i] ? fold.test_speakers : fold.train_speakers).push_back(keys[i]);
        }
      }
    };
    place(asd, asd_fold);
    place(td, td_fold);
    for (auto& fold : plan.folds) {
      std::sort(fold.train_speakers.begin(), fold.train_speakers.end());
      std::sort(fold.test_speakers.begin(), fold.test_speakers.end());
    }
    return plan;
  }
  // Unreachable with >= 2 speakers per class: k = 2 is always feasible.
  fail(ErrorKind::Internal, "no feasible fold count");
}

Confusion& Confusion::operator+=(const Confusion& o) {
  tp += o.tp;
  fn += o.fn;
  fp += o.fp;
  tn += o.tn;
  return *this;
}

Metrics metrics_from_confusion(const Confusion& cm) {
  Metrics m;
  m.cm = cm;
  const double tp = static_cast<double>(cm.tp), fn = static_cast<double>(cm.fn);
  const double fp = static_cast<double>(cm.fp), tn = static_cast<double>(cm.tn);
  m.accuracy = safe_div(tp + tn, tp + tn + fp + fn);
  m.precision = safe_div(tp, tp + fp);
  m.recall = safe_div(tp, tp + fn);
  m.f1 = f1_of(tp, fp, fn);
  m.macro_f1 = 0.5 * (m.f1 + f1_of(tn, fn, fp));
  return m;
}

Metrics compute_metrics(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size()) {
    fail(ErrorKind::LengthMismatch, "y_true has " + std::to_string(y_true.size()) + " entries, y_pred has " +
                                        std::to_string(y_pred.size()));
  }
  if (y_true.empty()) fail(ErrorKind::Empty, "cannot score empty predictions");
  Confusion cm;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] == 1) {
      (y_pred[i] == 1 ? cm.tp : cm.fn) += 1;
    } else {
      (y_pred[i] == 1 ? cm.fp : cm.tn) += 1;
    }
  }
  return metrics_from_confusion(cm);
}

TreeModel fit_model(const ModelSpec& spec, const MatrixView& X, std::span<const int> y, std::uint64_t seed) {
  switch (spec.kind) {
    case ModelKind::Cart: {
      const ClassWeights cw = inverse_frequency_weights(y);
      std::vector<double> w(y.size());
      for (std::size_t i = 0; i < y.size(); ++i) w[i] = cw.of(y[i]);
      TreeModel m = fit_cart_model(X, y, w, spec.cart);
      m.class_weights = cw;
      m.seed = seed;
      return m;
    }
    case ModelKind::Forest: {
      ForestConfig cfg = spec.forest;
      cfg.seed = seed;
      return fit_forest(X, y, cfg);
    }
    case ModelKind::Boosted: {
      BoostConfig cfg = spec.boost;
      cfg.seed = seed;
      return fit_boosted(X, y, cfg);
    }
  }
  fail(ErrorKind::Internal, "unknown model kind");
}

std::vector<std::size_t> rows_for_speakers(const FeatureTable& table, std::span<const std::string> keys) {
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    if (std::binary_search(keys.begin(), keys.end(), speaker_key(table.meta(r).speaker))) rows.push_back(r);
  }
  return rows;
}

std::vector<FoldRun> fit_plan(const FeatureTable& table, const SplitPlan& plan, const ModelSpec& spec,
                              std::uint64_t seed) {
  const auto labels = table.labels();
  std::vector<FoldRun> runs;
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    FoldRun run;
    run.fold = f;
    run.train_rows = rows_for_speakers(table, plan.folds[f].train_speakers);
    run.test_rows = rows_for_speakers(table, plan.folds[f].test_speakers);
    const auto Xv = gather(table, run.train_rows);
    std::vector<int> y(run.train_rows.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = labels[run.train_rows[i]];
    run.model = fit_model(spec, MatrixView(Xv, run.train_rows.size(), table.dim()), y, derive_seed(seed, f));
    run.model.schema_version = table.schema_version();
    runs.push_back(std::move(run));
  }
  return runs;
}

MetricsReport run_within_language(const FeatureTable& table, const std::string& language, const ModelSpec& spec,
                                  int nominal_k, std::uint64_t seed) {
  const FeatureTable sub = table.filter_language(language);
  if (sub.empty()) fail(ErrorKind::EmptyTable, "table has no rows for language '" + language + "'");
  const auto speakers = sub.speakers();
  const SplitPlan plan = plan_speaker_folds(speakers, nominal_k, seed);
  const auto runs = fit_plan(sub, plan, spec, seed);
  return make_report(sub, runs, language, spec, plan.nominal_k, plan.effective_k, seed);
}

MetricsReport run_pooled(const FeatureTable& table, const ModelSpec& spec, int nominal_k, std::uint64_t seed) {
  if (table.empty()) fail(ErrorKind::EmptyTable, "cannot evaluate an empty table");
  const auto speakers = table.speakers();
  const SplitPlan plan = plan_speaker_folds(speakers, nominal_k, seed);
  const auto runs = fit_plan(table, plan, spec, seed);
  return make_report(table, runs, "POOLED", spec, plan.nominal_k, plan.effective_k, seed);
}

std::vector<MetricsReport> run_loco(const FeatureTable& table, const ModelSpec& spec, std::uint64_t seed) {
  const auto languages = table.languages();
  if (languages.size() < 2) {
    fail(ErrorKind::SingleLanguageTable, "leave-one-corpus-out needs at least 2 languages, table has " +
                                             std::to_string(languages.size()));
  }
  std::vector<MetricsReport> reports;
  for (std::size_t li = 0; li < languages.size(); ++li) {
    FoldRun run;
    run.fold = 0;
    for (std::size_t r = 0; r < table.rows(); ++r) {
      (table.meta(r).speaker.language == languages[li] ? run.test_rows : run.train_rows).push_back(r);
    }
    const auto labels = table.labels();
    const auto Xv = gather(table, run.train_rows);
    std::vector<int> y(run.train_rows.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = labels[run.train_rows[i]];
    run.model = fit_model(spec, MatrixView(Xv, run.train_rows.size(), table.dim()), y, derive_seed(seed, li));
    std::vector<FoldRun> runs;
    runs.push_back(std::move(run));
    reports.push_back(make_report(table, runs, "LOCO-" + languages[li], spec, 1, 1, seed));
  }
  return reports;
}

std::string report_to_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["scope"] = report.scope;
  j["model"] = to_string(report.model);
  j["nominal_k"] = report.nominal_k;
  j["effective_k"] = report.effective_k;
  j["seed"] = report.seed;
  j["confusion_matrix_order"] = {"ASD", "TD"};
  auto& folds = j["folds"] = nlohmann::ordered_json::array();
  for (const FoldResult& f : report.folds) {
    nlohmann::ordered_json o = metrics_json(f.utterance);
    o["fold"] = f.fold;
    o["n_train"] = f.n_train;
    o["n_test"] = f.n_test;
    o["class_weights"] = {{"ASD", f.weights.asd}, {"TD", f.weights.td}};
    o["test_speakers"] = f.test_speakers;
    o["speaker_level"] = metrics_json(f.speaker);
    folds.push_back(std::move(o));
  }
  j["mean"] = {{"accuracy", report.accuracy.mean}, {"f1", report.f1.mean}, {"macro_f1", report.macro_f1.mean}};
  j["std"] = {{"accuracy", report.accuracy.std}, {"f1", report.f1.std}, {"macro_f1", report.macro_f1.std}};
  j["speaker_level"] = {{"mean", {{"accuracy", report.speaker_accuracy.mean}, {"f1", report.speaker_f1.mean}}},
                        {"std", {{"accuracy", report.speaker_accuracy.std}, {"f1", report.speaker_f1.std}}}};
  j["confusion_matrix_total"] = cm_json(report.total_cm);
  return j.dump(2) + "\n";
}

std::string report_to_csv(const MetricsReport& report) {
  std::string out =
      "scope,fold,n_train,n_test,accuracy,precision,recall,f1,macro_f1,tp,fn,fp,tn,speaker_accuracy,speaker_f1\n";
  for (const FoldResult& f : report.folds) {
    const Metrics& m = f.utterance;
    out += report.scope + "," + std::to_string(f.fold) + "," + std::to_string(f.n_train) + "," +
           std::to_string(f.n_test) + "," + fmt(m.accuracy) + "," + fmt(m.precision) + "," + fmt(m.recall) + "," +
           fmt(m.f1) + "," + fmt(m.macro_f1) + "," + std::to_string(m.cm.tp) + "," + std::to_string(m.cm.fn) + "," +
           std::to_string(m.cm.fp) + "," + std::to_string(m.cm.tn) + "," + fmt(f.speaker.accuracy) + "," +
           fmt(f.speaker.f1) + "\n";
  }
  auto summary = [&](const char* label, auto pick) {
    out += report.scope + "," + label + ",,," + fmt(pick(report.accuracy)) + ",,," + fmt(pick(report.f1)) + "," +
           fmt(pick(report.macro_f1)) + ",,,,," + fmt(pick(report.speaker_accuracy)) + "," +
           fmt(pick(report.speaker_f1)) + "\n";
  };
  summary("mean", [](const Aggregate& a) { return a.mean; });
  summary("std", [](const Aggregate& a) { return a.std; });
  return out;
}

}  // namespace prosody
