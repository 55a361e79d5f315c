// Copyright 2026 The UWE Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "uwe/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "uwe/error.hpp"
#include "uwe/text_fold.hpp"

namespace uwe {
namespace {

using nlohmann::json;

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t") == std::string_view::npos;
}

std::string required_string(const json& object, const char* key,
                            std::size_t line_number) {
  const auto it = object.find(key);
  if (it == object.end() || !it->is_string()) {
    throw ValidationError("line " + std::to_string(line_number) +
                          ": missing string field \"" + key + "\"");
  }
  return it->get<std::string>();
}

/// Splits "a<TAB>b" lines; blank lines and '#' comments are skipped.
template <typename Fn>
void for_each_tsv_pair(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    strip_cr(line);
    if (is_blank(line) || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos ||
        tab == 0 || tab + 1 == line.size()) {
      throw ValidationError("line " + std::to_string(line_number) +
                            ": expected 'query_id<TAB>target_id'");
    }
    fn(line.substr(0, tab), line.substr(tab + 1), line_number);
  }
}

}  // namespace

std::string_view to_string(SpaceRole role) {
  switch (role) {
    case SpaceRole::kSkill:
      return "skill";
    case SpaceRole::kJob:
      return "job";
    case SpaceRole::kVacancySentence:
      return "vacancy_sentence";
    case SpaceRole::kSkillAlternative:
      return "skill_alternative";
    case SpaceRole::kGeneric:
      return "generic";
  }
  return "generic";
}

SpaceRole parse_space_role(std::string_view name) {
  for (const auto role :
       {SpaceRole::kSkill, SpaceRole::kJob, SpaceRole::kVacancySentence,
        SpaceRole::kSkillAlternative, SpaceRole::kGeneric}) {
    if (to_string(role) == name) return role;
  }
  throw ValidationError("unknown space role '" + std::string(name) + "'");
}

TextSpace::TextSpace(std::string name, SpaceRole role, std::vector<TextItem> items)
    : name_(std::move(name)), role_(role), items_(std::move(items)) {
  index_.reserve(items_.size());
  for (std::size_t i = 0; i < items_.size(); ++i) {
    const auto& item = items_[i];
    if (item.id.empty()) {
      throw ValidationError("space '" + name_ + "': item " + std::to_string(i) +
                            " has an empty id");
    }
    if (item.text.empty()) {
      throw ValidationError("space '" + name_ + "': item '" + item.id +
                            "' has empty text");
    }
    if (!index_.emplace(item.id, i).second) {
      throw ValidationError("space '" + name_ + "': duplicate id '" + item.id +
                            "'");
    }
  }
}

std::optional<std::size_t> TextSpace::index_of(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TextSpace parse_space(std::istream& in, std::string_view default_name,
                      std::optional<SpaceRole> role) {
  std::string name(default_name);
  SpaceRole header_role = SpaceRole::kGeneric;
  std::vector<TextItem> items;
  std::unordered_map<std::string, std::size_t> first_line;

  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    strip_cr(line);
    if (is_blank(line)) continue;
    if (line.rfind("#!", 0) == 0) {
      if (!items.empty()) {
        throw ValidationError("line " + std::to_string(line_number) +
                              ": header must precede all records");
      }
      const json header = json::parse(line.substr(2), nullptr, false);
      if (header.is_discarded() || !header.is_object()) {
        throw ValidationError("line " + std::to_string(line_number) +
                              ": malformed header");
      }
      if (auto it = header.find("name"); it != header.end() && it->is_string()) {
        name = it->get<std::string>();
      }
      if (auto it = header.find("role"); it != header.end() && it->is_string()) {
        header_role = parse_space_role(it->get<std::string>());
      }
      continue;
    }
    const json record = json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object()) {
      throw ValidationError("line " + std::to_string(line_number) +
                            ": malformed record");
    }
    TextItem item{required_string(record, "id", line_number),
                  required_string(record, "text", line_number)};
    if (item.id.empty() || item.text.empty()) {
      throw ValidationError("line " + std::to_string(line_number) +
                            ": id and text must be non-empty");
    }
    const auto [it, inserted] = first_line.emplace(item.id, line_number);
    if (!inserted) {
      throw ValidationError("duplicate id '" + item.id + "' on lines " +
                            std::to_string(it->second) + " and " +
                            std::to_string(line_number));
    }
    items.push_back(std::move(item));
  }
  return TextSpace(std::move(name), role.value_or(header_role), std::move(items));
}

TextSpace load_space(const std::filesystem::path& path,
                     std::optional<SpaceRole> role) {
  auto in = open_input(path);
  try {
    return parse_space(in, path.stem().string(), role);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void serialize_space(const TextSpace& space, std::ostream& out) {
  out << "#!" << json{{"name", space.name()}, {"role", to_string(space.role())}}.dump()
      << '\n';
  for (const auto& item : space.items()) {
    out << json{{"id", item.id}, {"text", item.text}}.dump() << '\n';
  }
}

void save_space(const TextSpace& space, const std::filesystem::path& path) {
  auto out = open_output(path);
  serialize_space(space, out);
}

// ---------------------------------------------------------------------------

RawEdgeList parse_edge_list(std::istream& in) {
  RawEdgeList raw;
  for_each_tsv_pair(in, [&](std::string q, std::string t, std::size_t line) {
    raw.lines.push_back({std::move(q), std::move(t), line});
  });
  return raw;
}

RawEdgeList read_edge_list(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    return parse_edge_list(in);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

BipartiteGraph::BipartiteGraph(SpacePtr query_space, SpacePtr target_space,
                               std::vector<Edge> edges)
    : query_space_(std::move(query_space)),
      target_space_(std::move(target_space)),
      edges_(std::move(edges)) {
  if (!query_space_ || !target_space_) {
    throw ValidationError("bipartite graph requires both spaces");
  }
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
  forward_.resize(query_space_->size());
  backward_.resize(target_space_->size());
  for (const auto& e : edges_) {
    if (e.query >= query_space_->size() || e.target >= target_space_->size()) {
      throw ValidationError("edge endpoint out of range");
    }
    forward_[e.query].push_back(e.target);
    backward_[e.target].push_back(e.query);
  }
  for (auto& list : backward_) std::sort(list.begin(), list.end());
}

bool BipartiteGraph::has_edge(std::size_t query, std::size_t target) const {
  const auto& targets = forward_.at(query);
  return std::binary_search(targets.begin(), targets.end(), target);
}

BipartiteGraph BipartiteGraph::transposed() const {
  std::vector<Edge> flipped;
  flipped.reserve(edges_.size());
  for (const auto& e : edges_) flipped.push_back({e.target, e.query});
  return BipartiteGraph(target_space_, query_space_, std::move(flipped));
}

BipartiteGraph build_graph(const RawEdgeList& raw, SpacePtr query_space,
                           SpacePtr target_space) {
  std::vector<Edge> edges;
  edges.reserve(raw.lines.size());
  for (const auto& line : raw.lines) {
    const auto q = query_space->index_of(line.query_id);
    if (!q) {
      throw ValidationError("line " + std::to_string(line.line_number) +
                            ": unknown query id '" + line.query_id + "'");
    }
    const auto t = target_space->index_of(line.target_id);
    if (!t) {
      throw ValidationError("line " + std::to_string(line.line_number) +
                            ": unknown target id '" + line.target_id + "'");
    }
    edges.push_back({*q, *t});
  }
  return BipartiteGraph(std::move(query_space), std::move(target_space),
                        std::move(edges));
}

BipartiteGraph load_graph(const std::filesystem::path& path, SpacePtr query_space,
                          SpacePtr target_space) {
  const auto raw = read_edge_list(path);
  try {
    return build_graph(raw, std::move(query_space), std::move(target_space));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string GraphReport::to_string() const {
  std::ostringstream out;
  for (const auto& id : isolated_queries) {
    out << "isolated_query\t" << id << '\n';
  }
  for (const auto& d : duplicate_edges) {
    out << "duplicate_edge\t" << d.query_id << '\t' << d.target_id << "\tlines "
        << d.first_line << ',' << d.duplicate_line << '\n';
  }
  for (const auto& d : dangling_ids) {
    out << "dangling_" << (d.is_query ? "query" : "target") << '\t' << d.id
        << "\tline " << d.line_number << '\n';
  }
  return out.str();
}

GraphReport validate_graph(const TextSpace& query_space,
                           const TextSpace& target_space, const RawEdgeList& raw) {
  GraphReport report;
  std::map<std::pair<std::string, std::string>, std::size_t> seen;
  std::vector<bool> has_edge(query_space.size(), false);
  for (const auto& line : raw.lines) {
    const auto q = query_space.index_of(line.query_id);
    const auto t = target_space.index_of(line.target_id);
    if (!q) report.dangling_ids.push_back({line.query_id, true, line.line_number});
    if (!t) report.dangling_ids.push_back({line.target_id, false, line.line_number});
    const auto [it, inserted] =
        seen.emplace(std::make_pair(line.query_id, line.target_id), line.line_number);
    if (!inserted) {
      report.duplicate_edges.push_back(
          {line.query_id, line.target_id, it->second, line.line_number});
    }
    if (q && t) has_edge[*q] = true;
  }
  for (std::size_t i = 0; i < query_space.size(); ++i) {
    if (!has_edge[i]) report.isolated_queries.push_back(query_space.at(i).id);
  }
  return report;
}

GraphReport validate_graph(const BipartiteGraph& graph) {
  GraphReport report;
  for (std::size_t q = 0; q < graph.query_space().size(); ++q) {
    if (graph.targets_of(q).empty()) {
      report.isolated_queries.push_back(graph.query_space().at(q).id);
    }
  }
  return report;
}

// ---------------------------------------------------------------------------

Qrels parse_qrels(std::istream& in) {
  Qrels qrels;
  for_each_tsv_pair(in, [&](std::string q, std::string t, std::size_t) {
    auto& targets = qrels[q];
    if (std::find(targets.begin(), targets.end(), t) == targets.end()) {
      targets.push_back(std::move(t));
    }
  });
  return qrels;
}

Qrels load_qrels(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    return parse_qrels(in);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void TaskSpec::validate() const {
  if (!query_space || !target_space) {
    throw ValidationError("task '" + name + "': missing query or target space");
  }
  for (const auto& [query, targets] : qrels) {
    if (!query_space->contains(query)) {
      throw ValidationError("task '" + name + "': qrels query '" + query +
                            "' not in space '" + query_space->name() + "'");
    }
    if (targets.empty()) {
      throw ValidationError("task '" + name + "': query '" + query +
                            "' has no relevant targets");
    }
    if (label_type == LabelType::kOne && targets.size() != 1) {
      throw ValidationError("task '" + name + "': single-label query '" + query +
                            "' has " + std::to_string(targets.size()) +
                            " relevant targets");
    }
    for (const auto& target : targets) {
      if (!target_space->contains(target)) {
        throw ValidationError("task '" + name + "': qrels target '" + target +
                              "' not in space '" + target_space->name() + "'");
      }
    }
  }
}

TaskSpec load_task(const std::filesystem::path& manifest) {
  auto in = open_input(manifest);
  const json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw ValidationError(manifest.string() + ": malformed task manifest");
  }
  const auto base = manifest.parent_path();
  const auto field = [&](const char* key) {
    const auto it = doc.find(key);
    if (it == doc.end() || !it->is_string()) {
      throw ValidationError(manifest.string() + ": missing string field \"" +
                            key + "\"");
    }
    return it->get<std::string>();
  };
  const auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
  };

  TaskSpec task;
  task.name = field("name");
  task.query_space = std::make_shared<const TextSpace>(load_space(resolve(field("query_space"))));
  const auto target_path = resolve(field("target_space"));
  const auto query_path = resolve(field("query_space"));
  if (std::filesystem::exists(target_path) &&
      std::filesystem::equivalent(target_path, query_path)) {
    task.target_space = task.query_space;
  } else {
    task.target_space = std::make_shared<const TextSpace>(load_space(target_path));
  }
  task.qrels = load_qrels(resolve(field("qrels")));
  const auto label = field("label_type");
  if (label == "one") {
    task.label_type = LabelType::kOne;
  } else if (label == "multi") {
    task.label_type = LabelType::kMulti;
  } else {
    throw ValidationError(manifest.string() + ": label_type must be 'one' or 'multi'");
  }
  task.exclude_self = doc.value("exclude_self", false);
  task.task_group = doc.value("task_group", task.name);
  try {
    task.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(manifest.string() + ": " + e.what());
  }
  return task;
}

// ---------------------------------------------------------------------------

std::vector<MergedJobProfile> dedup_merge_jobs(
    std::span<const RawVacancyRecord> records, std::size_t max_profile) {
  struct SkillTally {
    std::size_t occurrences = 0;
    double confidence_sum = 0.0;
  };
  struct Group {
    std::vector<std::pair<std::string, std::size_t>> surface_counts;
    std::map<std::string, SkillTally> skills;
    std::size_t duplicates = 0;
  };

  std::vector<Group> groups;
  std::unordered_map<std::string, std::size_t> group_of;
  for (const auto& record : records) {
    const auto surface = collapse_whitespace(record.title);
    const auto key = fold_case(surface);
    const auto [it, inserted] = group_of.emplace(key, groups.size());
    if (inserted) groups.emplace_back();
    auto& group = groups[it->second];
    ++group.duplicates;

    auto surface_it = std::find_if(
        group.surface_counts.begin(), group.surface_counts.end(),
        [&](const auto& entry) { return entry.first == surface; });
    if (surface_it == group.surface_counts.end()) {
      group.surface_counts.emplace_back(surface, 1);
    } else {
      ++surface_it->second;
    }

    // A skill listed twice in one record counts once, at its highest confidence.
    std::map<std::string_view, double> per_record;
    for (const auto& skill : record.skills) {
      auto [pos, fresh] = per_record.emplace(skill.skill_id, skill.confidence);
      if (!fresh) pos->second = std::max(pos->second, skill.confidence);
    }
    for (const auto& [skill_id, confidence] : per_record) {
      auto& tally = group.skills[std::string(skill_id)];
      ++tally.occurrences;
      tally.confidence_sum += confidence;
    }
  }

  std::vector<MergedJobProfile> merged;
  merged.reserve(groups.size());
  for (auto& group : groups) {
    MergedJobProfile profile;
    profile.duplicate_count = group.duplicates;
    // Most frequent surface form; first seen wins ties.
    const auto best = std::max_element(
        group.surface_counts.begin(), group.surface_counts.end(),
        [](const auto& a, const auto& b) { return a.second < b.second; });
    profile.title = best->first;

    for (const auto& [skill_id, tally] : group.skills) {
      if (2 * tally.occurrences < group.duplicates) continue;
      profile.skills.push_back(
          {skill_id, tally.confidence_sum / static_cast<double>(tally.occurrences)});
    }
    std::stable_sort(profile.skills.begin(), profile.skills.end(),
                     [](const SkillPrediction& a, const SkillPrediction& b) {
                       if (a.confidence != b.confidence) return a.confidence > b.confidence;
                       return a.skill_id < b.skill_id;
                     });
    if (profile.skills.size() > max_profile) profile.skills.resize(max_profile);
    merged.push_back(std::move(profile));
  }
  return merged;
}

std::vector<RawVacancyRecord> parse_vacancy_records(std::istream& in) {
  std::vector<RawVacancyRecord> records;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    strip_cr(line);
    if (is_blank(line)) continue;
    const json doc = json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
      throw ValidationError("line " + std::to_string(line_number) +
                            ": malformed vacancy record");
    }
    RawVacancyRecord record;
    record.title = required_string(doc, "title", line_number);
    if (const auto it = doc.find("skills"); it != doc.end()) {
      if (!it->is_array()) {
        throw ValidationError("line " + std::to_string(line_number) +
                              ": \"skills\" must be an array");
      }
      for (const auto& entry : *it) {
        if (!entry.is_object()) {
          throw ValidationError("line " + std::to_string(line_number) +
                                ": skill entries must be objects");
        }
        SkillPrediction skill{required_string(entry, "id", line_number),
                              entry.value("confidence", 1.0)};
        if (!(skill.confidence >= 0.0 && skill.confidence <= 1.0)) {
          throw ValidationError("line " + std::to_string(line_number) +
                                ": confidence outside [0, 1] for skill '" +
                                skill.skill_id + "'");
        }
        record.skills.push_back(std::move(skill));
      }
    }
    records.push_back(std::move(record));
  }
  return records;
}

void write_merged_profiles(std::span<const MergedJobProfile> profiles,
                           std::ostream& out) {
  for (const auto& profile : profiles) {
    json skills = json::array();
    for (const auto& skill : profile.skills) {
      skills.push_back({{"id", skill.skill_id}, {"confidence", skill.confidence}});
    }
    out << json{{"title", profile.title},
                {"skills", std::move(skills)},
                {"duplicates", profile.duplicate_count}}
               .dump()
        << '\n';
  }
}

}  // namespace uwe
