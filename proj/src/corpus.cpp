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

#include "prosody/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "prosody/error.hpp"

namespace prosody {

namespace {

const std::vector<std::string> kMetaColumns = {"utterance_id", "speaker_id", "group", "language",
                                               "sex",          "age",        "duration_s"};
constexpr const char* kSchemaPrefix = "#schema_version=";

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string quote(const std::string& text) {
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line, std::size_t row) {
  std::vector<std::string> fields;
  std::string cur;
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (in_quotes) fail(ErrorKind::ParseError, "row " + std::to_string(row) + ": unterminated quote");
  fields.push_back(std::move(cur));
  return fields;
}

double parse_double(const std::string& cell, std::size_t row, std::size_t col) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    fail(ErrorKind::ParseError, "row " + std::to_string(row) + ", column " + std::to_string(col + 1) +
                                    ": cannot parse number '" + cell + "'");
  }
}

bool row_less(const RowMeta& a, const RowMeta& b) {
  if (a.speaker.language != b.speaker.language) return a.speaker.language < b.speaker.language;
  if (a.speaker.speaker_id != b.speaker.speaker_id) return a.speaker.speaker_id < b.speaker.speaker_id;
  return a.utterance_id < b.utterance_id;
}

std::string pair_text(std::size_t utts, std::size_t ids) {
  return std::to_string(utts) + " / " + std::to_string(ids);
}

}  // namespace

std::string to_string(Group g) { return g == Group::ASD ? "ASD" : "TD"; }

std::string to_string(Sex s) {
  switch (s) {
    case Sex::M: return "M";
    case Sex::F: return "F";
    case Sex::Unknown: return "";
  }
  return "";
}

Group parse_group(const std::string& text) {
  if (text == "ASD") return Group::ASD;
  if (text == "TD") return Group::TD;
  fail(ErrorKind::ParseError, "unknown group '" + text + "'");
}

Sex parse_sex(const std::string& text) {
  if (text == "M") return Sex::M;
  if (text == "F") return Sex::F;
  if (text.empty() || text == "unknown") return Sex::Unknown;
  fail(ErrorKind::ParseError, "unknown sex '" + text + "'");
}

FeatureTable::FeatureTable(std::string schema_version, std::vector<std::string> feature_names,
                           std::vector<RowMeta> rows, std::vector<double> values)
    : schema_version_(std::move(schema_version)),
      feature_names_(std::move(feature_names)),
      meta_(std::move(rows)),
      values_(std::move(values)) {
  if (values_.size() != meta_.size() * feature_names_.size()) {
    fail(ErrorKind::DimensionMismatch, "feature matrix size does not match rows x columns");
  }
}

std::vector<int> FeatureTable::labels() const {
  std::vector<int> y(meta_.size());
  std::transform(meta_.begin(), meta_.end(), y.begin(),
                 [](const RowMeta& m) { return label_of(m.speaker.group); });
  return y;
}

std::vector<std::string> FeatureTable::languages() const {
  std::set<std::string> langs;
  for (const auto& m : meta_) langs.insert(m.speaker.language);
  return {langs.begin(), langs.end()};
}

std::vector<SpeakerMeta> FeatureTable::speakers() const {
  std::map<std::pair<std::string, std::string>, SpeakerMeta> unique;
  for (const auto& m : meta_) unique.emplace(std::pair{m.speaker.language, m.speaker.speaker_id}, m.speaker);
  std::vector<SpeakerMeta> out;
  out.reserve(unique.size());
  for (auto& [key, s] : unique) out.push_back(s);
  return out;
}

FeatureTable FeatureTable::subset(std::span<const std::size_t> indices) const {
  std::vector<RowMeta> rows;
  std::vector<double> values;
  rows.reserve(indices.size());
  values.reserve(indices.size() * dim());
  for (std::size_t i : indices) {
    rows.push_back(meta_[i]);
    const auto r = row(i);
    values.insert(values.end(), r.begin(), r.end());
  }
  return FeatureTable(schema_version_, feature_names_, std::move(rows), std::move(values));
}

FeatureTable FeatureTable::filter_language(const std::string& language) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < meta_.size(); ++i) {
    if (meta_[i].speaker.language == language) idx.push_back(i);
  }
  return subset(idx);
}

FeatureTable build_table(std::span<const UtteranceRecord> records, const FeatureSchema& schema) {
  std::set<std::string> ids;
  std::map<std::pair<std::string, std::string>, SpeakerMeta> speakers;
  for (const auto& rec : records) {
    if (rec.features.schema_version != schema.version()) {
      fail(ErrorKind::SchemaMismatch, "record '" + rec.utterance_id + "' has schema '" +
                                          rec.features.schema_version + "', table uses '" +
                                          schema.version() + "'");
    }
    if (rec.features.values.size() != schema.dimension()) {
      fail(ErrorKind::SchemaMismatch, "record '" + rec.utterance_id + "' has " +
                                          std::to_string(rec.features.values.size()) + " features");
    }
    if (!ids.insert(rec.utterance_id).second) {
      fail(ErrorKind::DuplicateUtteranceId, "duplicate utterance id '" + rec.utterance_id + "'");
    }
    if (!(rec.duration_s > 0.0)) {
      fail(ErrorKind::InvalidArgument, "record '" + rec.utterance_id + "' has non-positive duration");
    }
    auto [it, inserted] = speakers.emplace(std::pair{rec.speaker.language, rec.speaker.speaker_id}, rec.speaker);
    if (!inserted && !(it->second == rec.speaker)) {
      fail(ErrorKind::InvalidArgument, "speaker '" + rec.speaker.speaker_id + "' has inconsistent metadata");
    }
  }

  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<RowMeta> metas(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    metas[i] = RowMeta{records[i].utterance_id, records[i].speaker, records[i].duration_s};
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return row_less(metas[a], metas[b]); });

  std::vector<RowMeta> rows;
  std::vector<double> values;
  rows.reserve(records.size());
  values.reserve(records.size() * schema.dimension());
  for (std::size_t i : order) {
    rows.push_back(metas[i]);
    values.insert(values.end(), records[i].features.values.begin(), records[i].features.values.end());
  }
  return FeatureTable(schema.version(), schema.names(), std::move(rows), std::move(values));
}

CorpusSummary summarize(const FeatureTable& table) {
  if (table.empty()) fail(ErrorKind::EmptyTable, "cannot summarize an empty table");

  struct Acc {
    std::size_t asd_utts = 0, td_utts = 0;
    std::set<std::string> asd_ids, td_ids;
    double duration = 0.0;
  };
  std::map<std::string, Acc> per_language;
  for (const auto& m : table.metas()) {
    Acc& a = per_language[m.speaker.language];
    if (m.speaker.group == Group::ASD) {
      ++a.asd_utts;
      a.asd_ids.insert(m.speaker.speaker_id);
    } else {
      ++a.td_utts;
      a.td_ids.insert(m.speaker.speaker_id);
    }
    a.duration += m.duration_s;
  }

  CorpusSummary s;
  s.all.label = "ALL";
  double total_duration = 0.0;
  for (const auto& [lang, a] : per_language) {
    SummaryRow r;
    r.label = lang;
    r.asd_utts = a.asd_utts;
    r.td_utts = a.td_utts;
    r.asd_ids = a.asd_ids.size();
    r.td_ids = a.td_ids.size();
    r.total_utts = a.asd_utts + a.td_utts;
    std::set<std::string> all_ids = a.asd_ids;
    all_ids.insert(a.td_ids.begin(), a.td_ids.end());
    r.total_ids = all_ids.size();
    r.mean_dur_s = a.duration / static_cast<double>(r.total_utts);
    s.languages.push_back(r);

    s.all.asd_utts += r.asd_utts;
    s.all.asd_ids += r.asd_ids;
    s.all.td_utts += r.td_utts;
    s.all.td_ids += r.td_ids;
    s.all.total_utts += r.total_utts;
    s.all.total_ids += r.total_ids;
    total_duration += a.duration;
  }
  s.all.mean_dur_s = total_duration / static_cast<double>(s.all.total_utts);
  return s;
}

std::string summary_to_text(const CorpusSummary& summary) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"Language", "ASD (utt./IDs)", "TD (utt./IDs)", "Mean dur. (s)", "Total (utt./IDs)"});
  auto add = [&](const SummaryRow& r) {
    char dur[32];
    std::snprintf(dur, sizeof dur, "%.2f", r.mean_dur_s);
    cells.push_back({r.label, pair_text(r.asd_utts, r.asd_ids), pair_text(r.td_utts, r.td_ids), dur,
                     pair_text(r.total_utts, r.total_ids)});
  };
  for (const auto& r : summary.languages) add(r);
  add(summary.all);

  std::vector<std::size_t> width(cells[0].size(), 0);
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (std::size_t r = 0; r < cells.size(); ++r) {
    if (r == cells.size() - 1) {
      std::size_t total = 0;
      for (std::size_t w : width) total += w + 2;
      out += std::string(total - 2, '-') + "\n";
    }
    std::string line;
    for (std::size_t c = 0; c < cells[r].size(); ++c) {
      std::string cell = cells[r][c];
      cell.resize(width[c], ' ');
      line += cell;
      if (c + 1 < cells[r].size()) line += "  ";
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  return out;
}

std::string summary_to_csv(const CorpusSummary& summary) {
  std::string out = "language,asd_utts,asd_ids,td_utts,td_ids,mean_dur_s,total_utts,total_ids\n";
  auto add = [&](const SummaryRow& r) {
    char dur[32];
    std::snprintf(dur, sizeof dur, "%.6f", r.mean_dur_s);
    out += r.label + "," + std::to_string(r.asd_utts) + "," + std::to_string(r.asd_ids) + "," +
           std::to_string(r.td_utts) + "," + std::to_string(r.td_ids) + "," + dur + "," +
           std::to_string(r.total_utts) + "," + std::to_string(r.total_ids) + "\n";
  };
  for (const auto& r : summary.languages) add(r);
  add(summary.all);
  return out;
}

std::string table_to_csv(const FeatureTable& table) {
  std::string out = kSchemaPrefix + table.schema_version() + "\n";
  for (std::size_t i = 0; i < kMetaColumns.size(); ++i) out += (i ? "," : "") + kMetaColumns[i];
  for (const auto& n : table.feature_names()) out += "," + n;
  out += "\n";
  for (std::size_t r = 0; r < table.rows(); ++r) {
    const RowMeta& m = table.meta(r);
    out += quote(m.utterance_id) + "," + quote(m.speaker.speaker_id) + "," + quote(to_string(m.speaker.group)) +
           "," + quote(m.speaker.language) + ",";
    out += m.speaker.sex == Sex::Unknown ? std::string() : quote(to_string(m.speaker.sex));
    out += ",";
    if (m.speaker.age_years) out += format_number(*m.speaker.age_years);
    out += "," + format_number(m.duration_s);
    for (double v : table.row(r)) out += "," + format_number(v);
    out += "\n";
  }
  return out;
}

FeatureTable table_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::string schema_version;
  std::vector<std::string> header;
  std::vector<RowMeta> rows;
  std::vector<double> values;
  std::size_t line_no = 0;
  std::size_t data_row = 0;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header.empty() && line.rfind(kSchemaPrefix, 0) == 0) {
      schema_version = line.substr(std::string(kSchemaPrefix).size());
      continue;
    }
    if (header.empty()) {
      header = split_csv_line(line, 0);
      if (header.size() < kMetaColumns.size() ||
          !std::equal(kMetaColumns.begin(), kMetaColumns.end(), header.begin())) {
        fail(ErrorKind::ParseError, "header must start with utterance_id,speaker_id,group,language,sex,age,duration_s");
      }
      continue;
    }
    ++data_row;
    const auto cells = split_csv_line(line, data_row);
    if (cells.size() != header.size()) {
      fail(ErrorKind::ParseError, "row " + std::to_string(data_row) + " (line " + std::to_string(line_no) +
                                      "): expected " + std::to_string(header.size()) + " columns, found " +
                                      std::to_string(cells.size()));
    }
    RowMeta m;
    m.utterance_id = cells[0];
    m.speaker.speaker_id = cells[1];
    try {
      m.speaker.group = parse_group(cells[2]);
      m.speaker.sex = parse_sex(cells[4]);
    } catch (const Error& e) {
      fail(ErrorKind::ParseError, "row " + std::to_string(data_row) + ": " + e.what());
    }
    m.speaker.language = cells[3];
    if (!cells[5].empty()) m.speaker.age_years = parse_double(cells[5], data_row, 5);
    m.duration_s = parse_double(cells[6], data_row, 6);
    rows.push_back(std::move(m));
    for (std::size_t c = kMetaColumns.size(); c < cells.size(); ++c) {
      values.push_back(parse_double(cells[c], data_row, c));
    }
  }
  if (header.empty()) fail(ErrorKind::ParseError, "missing header row");
  std::vector<std::string> names(header.begin() + static_cast<std::ptrdiff_t>(kMetaColumns.size()), header.end());
  if (schema_version.empty()) {
    schema_version = names == FeatureSchema::standard().names() ? FeatureSchema::standard().version() : "unknown";
  }
  return FeatureTable(schema_version, std::move(names), std::move(rows), std::move(values));
}

void save_table(const std::filesystem::path& path, const FeatureTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path.string());
  out << table_to_csv(table);
}

FeatureTable load_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::MissingInput, "cannot open feature table " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return table_from_csv(buf.str());
}

const SpeakerMeta& CorpusManifest::speaker(const std::string& id) const {
  for (const auto& s : speakers) {
    if (s.speaker_id == id) return s;
  }
  fail(ErrorKind::ConfigError, "manifest '" + corpus_name + "' has no speaker '" + id + "'");
}

std::filesystem::path CorpusManifest::resolve(const ClipEntry& clip) const {
  const std::filesystem::path p(clip.path);
  return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
}

ChannelSelector parse_channel(const std::string& text) {
  if (text == "mono") return ChannelSelector::mono_required();
  if (text == "downmix") return ChannelSelector::downmix_average();
  if (text == "0" || text == "left") return ChannelSelector::take_channel(0);
  if (text == "1" || text == "right") return ChannelSelector::take_channel(1);
  fail(ErrorKind::ConfigError, "unknown channel selector '" + text + "'");
}

std::string clip_id_of(const ClipEntry& clip) { return std::filesystem::path(clip.path).stem().string(); }

std::string manifest_to_json(const CorpusManifest& manifest) {
  nlohmann::ordered_json j;
  j["corpus_name"] = manifest.corpus_name;
  j["language"] = manifest.language;
  j["speakers"] = nlohmann::ordered_json::array();
  for (const auto& s : manifest.speakers) {
    nlohmann::ordered_json o;
    o["speaker_id"] = s.speaker_id;
    o["group"] = to_string(s.group);
    o["language"] = s.language;
    o["sex"] = s.sex == Sex::Unknown ? "unknown" : to_string(s.sex);
    if (s.age_years) o["age_years"] = *s.age_years; else o["age_years"] = nullptr;
    j["speakers"].push_back(o);
  }
  j["clips"] = nlohmann::ordered_json::array();
  for (const auto& c : manifest.clips) {
    nlohmann::ordered_json o;
    o["path"] = c.path;
    o["speaker_id"] = c.speaker_id;
    o["channel"] = c.channel;
    if (!c.exclude.empty()) {
      o["exclude"] = nlohmann::ordered_json::array();
      for (const auto& iv : c.exclude) o["exclude"].push_back({iv.start_s, iv.end_s});
    }
    j["clips"].push_back(o);
  }
  return j.dump(2) + "\n";
}

CorpusManifest manifest_from_json(const std::string& text, const std::filesystem::path& base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::ConfigError, std::string("manifest is not valid JSON: ") + e.what());
  }
  CorpusManifest m;
  m.base_dir = base_dir;
  try {
    m.corpus_name = j.at("corpus_name").get<std::string>();
    m.language = j.at("language").get<std::string>();
    for (const auto& s : j.at("speakers")) {
      SpeakerMeta meta;
      meta.speaker_id = s.at("speaker_id").get<std::string>();
      meta.group = parse_group(s.at("group").get<std::string>());
      meta.language = s.value("language", m.language);
      meta.sex = parse_sex(s.value("sex", std::string()));
      if (s.contains("age_years") && !s["age_years"].is_null()) meta.age_years = s["age_years"].get<double>();
      m.speakers.push_back(meta);
    }
    for (const auto& c : j.at("clips")) {
      ClipEntry clip;
      clip.path = c.at("path").get<std::string>();
      clip.speaker_id = c.at("speaker_id").get<std::string>();
      if (c.contains("channel")) {
        clip.channel = c["channel"].is_number() ? std::to_string(c["channel"].get<int>()) : c["channel"].get<std::string>();
      }
      if (c.contains("exclude")) {
        for (const auto& iv : c["exclude"]) clip.exclude.push_back({iv.at(0).get<double>(), iv.at(1).get<double>()});
        std::sort(clip.exclude.begin(), clip.exclude.end(),
                  [](const Interval& a, const Interval& b) { return a.start_s < b.start_s; });
      }
      m.clips.push_back(clip);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::ConfigError, std::string("malformed manifest: ") + e.what());
  } catch (const Error& e) {
    fail(ErrorKind::ConfigError, std::string("malformed manifest: ") + e.what());
  }
  std::set<std::string> seen;
  for (const auto& s : m.speakers) {
    if (!seen.insert(s.speaker_id).second) {
      fail(ErrorKind::ConfigError, "speaker id '" + s.speaker_id + "' repeated in manifest");
    }
  }
  for (const auto& c : m.clips) (void)m.speaker(c.speaker_id);
  return m;
}

CorpusManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::MissingInput, "cannot open manifest " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return manifest_from_json(buf.str(), path.parent_path());
}

void save_manifest(const std::filesystem::path& path, const CorpusManifest& manifest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path.string());
  out << manifest_to_json(manifest);
}

}  // namespace prosody
