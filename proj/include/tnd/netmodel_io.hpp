#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tnd/netmodel.hpp"
#include "tnd/text_io.hpp"

namespace tnd {

inline constexpr std::string_view kNodesHeader = "id,x_meters,y_meters,is_rail";
inline constexpr std::string_view kArcsHeader =
    "id,origin,dest,mode,h_per_hour,in_motion_min,rider_min,cost,is_fixed";
inline constexpr std::string_view kDesignHeader = "arc_id,open_flag";

namespace detail {

inline void expect_header(LineReader& reader, std::string& line, std::string_view header) {
  if (!reader.next(line)) throw ParseError(fmt::format("missing header '{}'", header), reader.line_no());
  if (trim(line) != header)
    throw ParseError(fmt::format("expected header '{}', got '{}'", header, line), reader.line_no());
}

inline std::vector<std::string> fields_exact(const std::string& line, std::size_t count, std::size_t line_no) {
  auto f = split_csv(line, line_no);
  if (f.size() != count)
    throw ParseError(fmt::format("expected {} fields, got {}", count, f.size()), line_no);
  for (const auto& x : f)
    if (trim(x).empty()) throw ParseError("empty field", line_no);
  return f;
}

}  // namespace detail

inline std::vector<Node> read_nodes(std::istream& in, Provenance* provenance = nullptr) {
  LineReader reader(in);
  std::string line;
  detail::expect_header(reader, line, kNodesHeader);
  std::vector<Node> nodes;
  while (reader.next(line)) {
    auto f = detail::fields_exact(line, 4, reader.line_no());
    nodes.push_back({f[0], {parse_double(f[1], reader.line_no()), parse_double(f[2], reader.line_no())},
                     parse_flag(f[3], reader.line_no())});
  }
  if (provenance) *provenance = reader.provenance;
  return nodes;
}

inline std::vector<Arc> read_arcs(std::istream& in, Provenance* provenance = nullptr) {
  LineReader reader(in);
  std::string line;
  detail::expect_header(reader, line, kArcsHeader);
  std::vector<Arc> arcs;
  while (reader.next(line)) {
    const auto n = reader.line_no();
    auto f = detail::fields_exact(line, 9, n);
    Arc a;
    a.id = f[0];
    a.origin = f[1];
    a.dest = f[2];
    a.mode = f[3];
    a.frequency = static_cast<int>(parse_int(f[4], n));
    a.in_motion_minutes = parse_double(f[5], n);
    a.rider_minutes = parse_double(f[6], n);
    a.cost = parse_double(f[7], n);
    a.is_fixed = parse_flag(f[8], n);
    arcs.push_back(std::move(a));
  }
  if (provenance) *provenance = reader.provenance;
  return arcs;
}

inline std::string write_nodes(const std::vector<Node>& nodes, const Provenance& provenance = {}) {
  std::string out = provenance.render();
  out += kNodesHeader;
  out += '\n';
  for (const Node& n : nodes)
    out += fmt::format("{},{},{},{}\n", n.id, format_double(n.position.x), format_double(n.position.y),
                       n.is_rail_station ? 1 : 0);
  return out;
}

inline std::string write_arcs(const std::vector<Arc>& arcs, const Provenance& provenance = {}) {
  std::string out = provenance.render();
  out += kArcsHeader;
  out += '\n';
  for (const Arc& a : arcs)
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", a.id, a.origin, a.dest, a.mode, a.frequency,
                       format_double(a.in_motion_minutes), format_double(a.rider_minutes), format_double(a.cost),
                       a.is_fixed ? 1 : 0);
  return out;
}

inline TransitGraph load_graph(const std::filesystem::path& nodes_file, const std::filesystem::path& arcs_file,
                               GraphOptions options = {}) {
  auto nin = open_input(nodes_file);
  auto ain = open_input(arcs_file);
  return TransitGraph(read_nodes(nin), read_arcs(ain), options);
}

inline NetworkDesign read_design(std::istream& in, const TransitGraph& graph, Provenance* provenance = nullptr) {
  LineReader reader(in);
  std::string line;
  detail::expect_header(reader, line, kDesignHeader);
  std::map<std::string, bool> flags;
  while (reader.next(line)) {
    auto f = detail::fields_exact(line, 2, reader.line_no());
    if (!flags.emplace(f[0], parse_flag(f[1], reader.line_no())).second)
      throw ParseError(fmt::format("arc '{}' listed twice", f[0]), reader.line_no());
  }
  if (provenance) *provenance = reader.provenance;
  return NetworkDesign::from_map(graph, flags);
}

inline std::string write_design(const NetworkDesign& design, const TransitGraph& graph,
                                const Provenance& provenance = {}) {
  require_same_shape(design, graph);
  std::string out = provenance.render();
  out += kDesignHeader;
  out += '\n';
  for (std::size_t i = 0; i < graph.arcs().size(); ++i)
    out += fmt::format("{},{}\n", graph.arcs()[i].id, design.open[i] ? 1 : 0);
  return out;
}

}  // namespace tnd
