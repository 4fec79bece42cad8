#pragma once

#include "graphair/common.hpp"
#include "graphair/graph.hpp"

#include <nlohmann/json.hpp>

#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace graphair {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// CSV helpers

/// Splits one CSV record. Supports double-quoted fields with "" escapes.
inline std::vector<std::string> split_csv_line(std::string_view line, char sep = ',') {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == sep) {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

inline std::vector<std::string> split_whitespace(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.emplace_back(line.substr(start, i - start));
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) return std::nullopt;
  return value;
}

inline std::optional<long long> parse_integer(std::string_view text) {
  const auto value = parse_double(text);
  if (!value || *value != std::floor(*value)) return std::nullopt;
  return static_cast<long long>(*value);
}

// ---------------------------------------------------------------------------
// Dataset manifest

/// How the "Edges" statistic of a dataset counts its undirected edge set E
/// on n nodes.
enum class EdgeCountConvention { undirected, directed, undirected_with_self_loops, directed_with_self_loops };

inline std::string to_string(EdgeCountConvention c) {
  switch (c) {
    case EdgeCountConvention::undirected: return "undirected";
    case EdgeCountConvention::directed: return "directed";
    case EdgeCountConvention::undirected_with_self_loops: return "undirected_with_self_loops";
    case EdgeCountConvention::directed_with_self_loops: return "directed_with_self_loops";
  }
  return "undirected";
}

inline EdgeCountConvention edge_convention_from_string(const std::string& s) {
  if (s == "undirected") return EdgeCountConvention::undirected;
  if (s == "directed") return EdgeCountConvention::directed;
  if (s == "undirected_with_self_loops") return EdgeCountConvention::undirected_with_self_loops;
  if (s == "directed_with_self_loops") return EdgeCountConvention::directed_with_self_loops;
  throw DataError("unknown edge count convention '" + s + "'");
}

inline long long count_edges(const Graph& g, EdgeCountConvention c) {
  const auto m = static_cast<long long>(g.num_edges());
  const auto n = static_cast<long long>(g.num_nodes());
  switch (c) {
    case EdgeCountConvention::undirected: return m;
    case EdgeCountConvention::directed: return 2 * m;
    case EdgeCountConvention::undirected_with_self_loops: return m + n;
    case EdgeCountConvention::directed_with_self_loops: return 2 * m + n;
  }
  return m;
}

struct DatasetStats {
  long long nodes = 0;
  long long edges = 0;
  long long features = 0;
  long long sensitive_groups = 0;
};

/// Native-format conversion recipe stored alongside a manifest.
struct NativeSource {
  std::string format;  // "fairgnn", "linqs" or "planetoid"
  std::string nodes;
  std::string edges;
  std::string id_column;
  std::string sensitive_column;
  std::string label_column;
  std::vector<std::string> drop_columns;
  bool clip_labels = false;
};

struct DatasetSpec {
  std::string name;
  fs::path node_file;
  fs::path edge_file;
  std::string id_column = "id";
  std::string sensitive_column = "sensitive";
  std::optional<std::string> label_column;
  EdgeCountConvention edge_convention = EdgeCountConvention::undirected;
  std::optional<DatasetStats> expected_stats;
  NodeSplitConfig node_split;
  bool standardize = false;
  std::optional<NativeSource> native;
  std::string notes;
};

inline DatasetSpec dataset_spec_from_json(const nlohmann::json& j) {
  DatasetSpec spec;
  spec.name = j.at("name").get<std::string>();
  spec.node_file = j.at("node_file").get<std::string>();
  spec.edge_file = j.at("edge_file").get<std::string>();
  spec.id_column = j.value("id_column", std::string("id"));
  spec.sensitive_column = j.value("sensitive_column", std::string("sensitive"));
  if (j.contains("label_column") && !j.at("label_column").is_null()) {
    spec.label_column = j.at("label_column").get<std::string>();
  }
  spec.edge_convention = edge_convention_from_string(j.value("edge_count_convention", std::string("undirected")));
  if (j.contains("expected_stats")) {
    const auto& s = j.at("expected_stats");
    spec.expected_stats = DatasetStats{s.at("nodes").get<long long>(), s.at("edges").get<long long>(),
                                       s.at("features").get<long long>(),
                                       s.at("sensitive_groups").get<long long>()};
  }
  if (j.contains("node_split")) {
    const auto& s = j.at("node_split");
    spec.node_split.train = s.value("train", spec.node_split.train);
    spec.node_split.val = s.value("val", spec.node_split.val);
    spec.node_split.test = s.value("test", spec.node_split.test);
    spec.node_split.max_train = s.value("max_train", spec.node_split.max_train);
    spec.node_split.seed = s.value("seed", spec.node_split.seed);
  }
  spec.standardize = j.value("standardize", false);
  if (j.contains("native")) {
    const auto& n = j.at("native");
    NativeSource src;
    src.format = n.at("format").get<std::string>();
    src.nodes = n.value("nodes", std::string());
    src.edges = n.value("edges", std::string());
    src.id_column = n.value("id_column", std::string());
    src.sensitive_column = n.value("sensitive_column", std::string());
    src.label_column = n.value("label_column", std::string());
    src.drop_columns = n.value("drop_columns", std::vector<std::string>{});
    src.clip_labels = n.value("clip_labels", false);
    spec.native = src;
  }
  spec.notes = j.value("notes", std::string());
  return spec;
}

inline nlohmann::json to_json(const DatasetSpec& spec) {
  nlohmann::json j;
  j["name"] = spec.name;
  j["node_file"] = spec.node_file.string();
  j["edge_file"] = spec.edge_file.string();
  j["id_column"] = spec.id_column;
  j["sensitive_column"] = spec.sensitive_column;
  j["label_column"] = spec.label_column ? nlohmann::json(*spec.label_column) : nlohmann::json(nullptr);
  j["edge_count_convention"] = to_string(spec.edge_convention);
  if (spec.expected_stats) {
    j["expected_stats"] = {{"nodes", spec.expected_stats->nodes},
                           {"edges", spec.expected_stats->edges},
                           {"features", spec.expected_stats->features},
                           {"sensitive_groups", spec.expected_stats->sensitive_groups}};
  }
  j["node_split"] = {{"train", spec.node_split.train},
                     {"val", spec.node_split.val},
                     {"test", spec.node_split.test},
                     {"max_train", spec.node_split.max_train},
                     {"seed", spec.node_split.seed}};
  j["standardize"] = spec.standardize;
  return j;
}

inline DatasetSpec read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("invalid manifest " + path.string() + ": " + e.what());
  }
  return dataset_spec_from_json(j);
}

// ---------------------------------------------------------------------------
// Canonical node / edge tables

struct NodeTable {
  std::vector<std::string> ids;
  std::vector<std::string> feature_names;
  Matrix features;
  std::vector<int> sensitive;
  std::vector<std::string> sensitive_levels;  // original values, by code
  std::vector<int> labels;
};

/// Reads the canonical node CSV. String sensitive values are mapped to codes
/// 0..k-1 in sorted order; integer values are used as-is. Empty or negative
/// labels mean "unlabelled".
inline NodeTable read_node_csv(const fs::path& path, const std::string& id_column,
                               const std::string& sensitive_column,
                               const std::optional<std::string>& label_column) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open node file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string(), 1, "missing header");
  const auto header = split_csv_line(line);
  int id_col = -1, s_col = -1, y_col = -1;
  std::vector<int> feature_cols;
  NodeTable table;
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    const auto& name = header[static_cast<std::size_t>(c)];
    if (name == id_column) id_col = c;
    else if (name == sensitive_column) s_col = c;
    else if (label_column && name == *label_column) y_col = c;
    else {
      feature_cols.push_back(c);
      table.feature_names.push_back(name);
    }
  }
  if (id_col < 0) throw ParseError(path.string(), 1, "missing id column '" + id_column + "'");
  if (s_col < 0) throw ParseError(path.string(), 1, "missing sensitive column '" + sensitive_column + "'");
  if (label_column && y_col < 0) throw ParseError(path.string(), 1, "missing label column '" + *label_column + "'");

  std::vector<std::vector<double>> rows;
  std::vector<std::string> raw_sensitive;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw ParseError(path.string(), line_no,
                       "expected " + std::to_string(header.size()) + " fields, found " +
                           std::to_string(fields.size()));
    }
    table.ids.push_back(fields[static_cast<std::size_t>(id_col)]);
    raw_sensitive.push_back(fields[static_cast<std::size_t>(s_col)]);
    std::vector<double> row;
    row.reserve(feature_cols.size());
    for (int c : feature_cols) {
      const auto v = parse_double(fields[static_cast<std::size_t>(c)]);
      if (!v) {
        throw ParseError(path.string(), line_no,
                         "non-numeric value '" + fields[static_cast<std::size_t>(c)] + "' in column '" +
                             header[static_cast<std::size_t>(c)] + "'");
      }
      row.push_back(*v);
    }
    rows.push_back(std::move(row));
    if (y_col >= 0) {
      const auto& text = fields[static_cast<std::size_t>(y_col)];
      if (text.empty()) {
        table.labels.push_back(kUnlabeled);
      } else {
        const auto y = parse_integer(text);
        if (!y) throw ParseError(path.string(), line_no, "non-integer label '" + text + "'");
        table.labels.push_back(*y < 0 ? kUnlabeled : static_cast<int>(*y));
      }
    }
  }

  bool all_integer = true;
  for (const auto& s : raw_sensitive) all_integer = all_integer && parse_integer(s).has_value();
  if (all_integer) {
    for (std::size_t i = 0; i < raw_sensitive.size(); ++i) {
      const long long v = *parse_integer(raw_sensitive[i]);
      if (v < 0) throw ParseError(path.string(), i + 2, "negative sensitive value");
      table.sensitive.push_back(static_cast<int>(v));
    }
    int max_s = -1;
    for (int s : table.sensitive) max_s = std::max(max_s, s);
    for (int s = 0; s <= max_s; ++s) table.sensitive_levels.push_back(std::to_string(s));
  } else {
    std::set<std::string> levels(raw_sensitive.begin(), raw_sensitive.end());
    table.sensitive_levels.assign(levels.begin(), levels.end());
    std::map<std::string, int> code;
    for (std::size_t k = 0; k < table.sensitive_levels.size(); ++k) {
      code[table.sensitive_levels[k]] = static_cast<int>(k);
    }
    for (const auto& s : raw_sensitive) table.sensitive.push_back(code[s]);
  }

  table.features.resize(static_cast<Index>(rows.size()), static_cast<Index>(feature_cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < rows[i].size(); ++c) {
      table.features(static_cast<Index>(i), static_cast<Index>(c)) = rows[i][c];
    }
  }
  return table;
}

/// Reads the canonical `src,dst` edge CSV. Endpoint ids are resolved against
/// `id_index`; self loops are dropped and counted in `self_loops`.
inline std::vector<Edge> read_edge_csv(const fs::path& path,
                                       const std::unordered_map<std::string, int>& id_index,
                                       std::size_t* self_loops = nullptr) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open edge file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string(), 1, "missing header");
  const auto header = split_csv_line(line);
  if (header.size() != 2 || header[0] != "src" || header[1] != "dst") {
    throw ParseError(path.string(), 1, "edge header must be 'src,dst'");
  }
  std::vector<Edge> edges;
  std::size_t loops = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 2) throw ParseError(path.string(), line_no, "expected 2 fields");
    const auto a = id_index.find(fields[0]);
    const auto b = id_index.find(fields[1]);
    if (a == id_index.end()) throw ParseError(path.string(), line_no, "unknown node id '" + fields[0] + "'");
    if (b == id_index.end()) throw ParseError(path.string(), line_no, "unknown node id '" + fields[1] + "'");
    if (a->second == b->second) {
      ++loops;
      continue;
    }
    edges.push_back(canonical(a->second, b->second));
  }
  if (self_loops != nullptr) *self_loops = loops;
  return edges;
}

inline void standardize_columns(Matrix& x) {
  for (Index c = 0; c < x.cols(); ++c) {
    const double mean = x.col(c).mean();
    const double var = (x.col(c).array() - mean).square().mean();
    const double sd = std::sqrt(var);
    x.col(c).array() -= mean;
    if (sd > 0) x.col(c) /= sd;
  }
}

inline DatasetStats graph_stats(const Graph& g, EdgeCountConvention convention) {
  return DatasetStats{g.num_nodes(), count_edges(g, convention), g.num_features(), g.num_sensitive_groups()};
}

/// Throws StatMismatchError naming the first field that disagrees.
inline void validate_stats(const DatasetStats& expected, const DatasetStats& actual) {
  if (expected.nodes != actual.nodes) throw StatMismatchError("nodes", expected.nodes, actual.nodes);
  if (expected.edges != actual.edges) throw StatMismatchError("edges", expected.edges, actual.edges);
  if (expected.features != actual.features) throw StatMismatchError("features", expected.features, actual.features);
  if (expected.sensitive_groups != actual.sensitive_groups) {
    throw StatMismatchError("sensitive_groups", expected.sensitive_groups, actual.sensitive_groups);
  }
}

struct LoadedDataset {
  Graph graph;
  DatasetStats stats;
  std::vector<std::string> node_ids;
  std::vector<std::string> feature_names;
  std::vector<std::string> sensitive_levels;
  std::size_t dropped_self_loops = 0;
};

/// Loads a dataset in canonical format. Relative paths in `spec` resolve
/// against `data_root`. Validates against `spec.expected_stats` when present.
inline LoadedDataset load_dataset(const DatasetSpec& spec, const fs::path& data_root = {}) {
  const auto resolve = [&](const fs::path& p) { return p.is_absolute() ? p : data_root / p; };
  NodeTable table = read_node_csv(resolve(spec.node_file), spec.id_column, spec.sensitive_column, spec.label_column);
  std::unordered_map<std::string, int> index;
  index.reserve(table.ids.size());
  for (std::size_t i = 0; i < table.ids.size(); ++i) {
    if (!index.emplace(table.ids[i], static_cast<int>(i)).second) {
      throw ParseError(resolve(spec.node_file).string(), i + 2, "duplicate node id '" + table.ids[i] + "'");
    }
  }
  LoadedDataset out;
  auto edges = read_edge_csv(resolve(spec.edge_file), index, &out.dropped_self_loops);
  if (spec.standardize) standardize_columns(table.features);

  const int n = static_cast<int>(table.ids.size());
  Graph graph(n, std::move(edges), std::move(table.features), std::move(table.sensitive),
              std::move(table.labels), {}, static_cast<int>(table.sensitive_levels.size()));
  require_contiguous_sensitive(graph);
  if (graph.has_labels()) graph = graph.with_roles(assign_node_roles(graph, spec.node_split));

  out.stats = graph_stats(graph, spec.edge_convention);
  if (spec.expected_stats) validate_stats(*spec.expected_stats, out.stats);
  out.graph = std::move(graph);
  out.node_ids = std::move(table.ids);
  out.feature_names = std::move(table.feature_names);
  out.sensitive_levels = std::move(table.sensitive_levels);
  return out;
}

// ---------------------------------------------------------------------------
// Writers and converters

/// Writes `graph` in the canonical format. Node ids are 0..n-1.
inline void write_canonical(const Graph& graph, const fs::path& node_file, const fs::path& edge_file,
                            const std::vector<std::string>& feature_names = {}) {
  if (!node_file.parent_path().empty()) fs::create_directories(node_file.parent_path());
  if (!edge_file.parent_path().empty()) fs::create_directories(edge_file.parent_path());
  std::ofstream nodes(node_file);
  if (!nodes) throw DataError("cannot write " + node_file.string());
  nodes << "id";
  for (Index c = 0; c < graph.num_features(); ++c) {
    nodes << ',' << (static_cast<std::size_t>(c) < feature_names.size() ? feature_names[static_cast<std::size_t>(c)]
                                                                         : "f" + std::to_string(c));
  }
  nodes << ",sensitive";
  if (graph.has_labels()) nodes << ",label";
  nodes << '\n';
  nodes.precision(17);
  for (int i = 0; i < graph.num_nodes(); ++i) {
    nodes << i;
    for (Index c = 0; c < graph.num_features(); ++c) nodes << ',' << graph.features()(i, c);
    nodes << ',' << graph.sensitive()[static_cast<std::size_t>(i)];
    if (graph.has_labels()) {
      const int y = graph.labels()[static_cast<std::size_t>(i)];
      nodes << ',';
      if (y != kUnlabeled) nodes << y;
    }
    nodes << '\n';
  }
  std::ofstream edges(edge_file);
  if (!edges) throw DataError("cannot write " + edge_file.string());
  edges << "src,dst\n";
  for (const Edge& e : graph.edges()) edges << e.u << ',' << e.v << '\n';
}

struct ConversionReport {
  std::size_t nodes = 0;
  std::size_t edge_lines = 0;
  std::size_t undirected_edges = 0;
  std::size_t self_loops = 0;
  std::size_t unknown_endpoints = 0;
  std::size_t features = 0;
};

namespace detail {

inline ConversionReport write_converted(const std::vector<std::string>& ids,
                                        const std::vector<std::vector<std::string>>& feature_cells,
                                        const std::vector<std::string>& feature_names,
                                        const std::vector<std::string>& sensitive,
                                        const std::vector<std::string>& labels,
                                        const std::vector<std::pair<std::string, std::string>>& raw_edges,
                                        const fs::path& out_dir) {
  ConversionReport report;
  fs::create_directories(out_dir);
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < ids.size(); ++i) index.emplace(ids[i], i);
  {
    std::ofstream nodes(out_dir / "nodes.csv");
    nodes << "id";
    for (const auto& name : feature_names) nodes << ',' << name;
    nodes << ",sensitive";
    if (!labels.empty()) nodes << ",label";
    nodes << '\n';
    for (std::size_t i = 0; i < ids.size(); ++i) {
      nodes << ids[i];
      for (const auto& cell : feature_cells[i]) nodes << ',' << cell;
      nodes << ',' << sensitive[i];
      if (!labels.empty()) nodes << ',' << labels[i];
      nodes << '\n';
    }
  }
  std::set<std::pair<std::size_t, std::size_t>> unique;
  for (const auto& [a, b] : raw_edges) {
    ++report.edge_lines;
    const auto ia = index.find(a);
    const auto ib = index.find(b);
    if (ia == index.end() || ib == index.end()) {
      ++report.unknown_endpoints;
      continue;
    }
    if (ia->second == ib->second) {
      ++report.self_loops;
      continue;
    }
    unique.emplace(std::min(ia->second, ib->second), std::max(ia->second, ib->second));
  }
  std::ofstream edges(out_dir / "edges.csv");
  edges << "src,dst\n";
  for (const auto& [a, b] : unique) edges << ids[a] << ',' << ids[b] << '\n';
  report.nodes = ids.size();
  report.undirected_edges = unique.size();
  report.features = feature_names.size();
  return report;
}

inline std::vector<std::pair<std::string, std::string>> read_pair_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_whitespace(line);
    if (fields.empty()) continue;
    if (fields.size() == 1) fields = split_csv_line(line);
    if (fields.size() < 2) throw ParseError(path.string(), line_no, "expected a node pair");
    pairs.emplace_back(fields[0], fields[1]);
  }
  return pairs;
}

}  // namespace detail

/// FairGNN-style tables (NBA, Pokec): a comma-separated node table with a
/// header and a whitespace-separated relationship file of id pairs.
/// Feature columns are all columns except id, sensitive, label and
/// `drop_columns`. With `clip_labels`, labels > 1 become 1 and negative
/// labels become unlabelled.
inline ConversionReport convert_fairgnn(const NativeSource& src, const fs::path& native_root,
                                        const fs::path& out_dir) {
  const fs::path node_path = native_root / src.nodes;
  std::ifstream in(node_path);
  if (!in) throw DataError("cannot open " + node_path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(node_path.string(), 1, "missing header");
  const auto header = split_csv_line(line);
  int id_col = -1, s_col = -1, y_col = -1;
  std::vector<int> feature_cols;
  std::vector<std::string> feature_names;
  const std::set<std::string> dropped(src.drop_columns.begin(), src.drop_columns.end());
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    const auto& name = header[static_cast<std::size_t>(c)];
    if (name == src.id_column) id_col = c;
    else if (name == src.sensitive_column) s_col = c;
    else if (!src.label_column.empty() && name == src.label_column) y_col = c;
    else if (!dropped.count(name)) {
      feature_cols.push_back(c);
      feature_names.push_back(name);
    }
  }
  if (id_col < 0 || s_col < 0 || (!src.label_column.empty() && y_col < 0)) {
    throw ParseError(node_path.string(), 1, "id, sensitive or label column not found");
  }
  std::vector<std::string> ids, sensitive, labels;
  std::vector<std::vector<std::string>> cells;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) throw ParseError(node_path.string(), line_no, "field count mismatch");
    ids.push_back(fields[static_cast<std::size_t>(id_col)]);
    sensitive.push_back(fields[static_cast<std::size_t>(s_col)]);
    std::vector<std::string> row;
    for (int c : feature_cols) row.push_back(fields[static_cast<std::size_t>(c)]);
    cells.push_back(std::move(row));
    if (y_col >= 0) {
      const auto y = parse_integer(fields[static_cast<std::size_t>(y_col)]);
      if (!y) throw ParseError(node_path.string(), line_no, "non-integer label");
      long long v = *y;
      if (src.clip_labels) v = v < 0 ? -1 : std::min(v, 1LL);
      labels.push_back(v < 0 ? std::string() : std::to_string(v));
    }
  }
  const auto pairs = detail::read_pair_file(native_root / src.edges);
  return detail::write_converted(ids, cells, feature_names, sensitive, labels, pairs, out_dir);
}

/// LINQS citation format: `<id> <f1> ... <fd> <class>` per line plus a
/// `<cited> <citing>` file. The paper class becomes the sensitive attribute.
inline ConversionReport convert_linqs(const NativeSource& src, const fs::path& native_root,
                                      const fs::path& out_dir) {
  const fs::path content = native_root / src.nodes;
  std::ifstream in(content);
  if (!in) throw DataError("cannot open " + content.string());
  std::vector<std::string> ids, sensitive;
  std::vector<std::vector<std::string>> cells;
  std::string line;
  std::size_t line_no = 0, width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_whitespace(line);
    if (fields.empty()) continue;
    if (fields.size() < 3) throw ParseError(content.string(), line_no, "too few fields");
    if (width == 0) width = fields.size();
    if (fields.size() != width) throw ParseError(content.string(), line_no, "field count mismatch");
    ids.push_back(fields.front());
    sensitive.push_back(fields.back());
    cells.emplace_back(fields.begin() + 1, fields.end() - 1);
  }
  std::vector<std::string> names;
  for (std::size_t c = 0; c + 2 < width; ++c) names.push_back("w" + std::to_string(c));
  const auto pairs = detail::read_pair_file(native_root / src.edges);
  return detail::write_converted(ids, cells, names, sensitive, {}, pairs, out_dir);
}

inline ConversionReport convert_native(const NativeSource& src, const fs::path& native_root,
                                       const fs::path& out_dir) {
  if (src.format == "fairgnn") return convert_fairgnn(src, native_root, out_dir);
  if (src.format == "linqs") return convert_linqs(src, native_root, out_dir);
  if (src.format == "planetoid") {
    throw DataError("planetoid pickles are converted by tools/convert_planetoid.py");
  }
  throw DataError("unknown native format '" + src.format + "'");
}

}  // namespace graphair
