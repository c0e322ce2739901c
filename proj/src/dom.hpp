#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace domq {

inline constexpr int kMaxDoms = 160;
inline constexpr int kMaxTextTokensPerNode = 4;

// One attributed element of a page. `id` is the node's index in its tree
// (preorder over the source document). `html_id` carries the element's
// id="..." attribute; it is ignored by the learned representation and only
// used by task predicates to reference nodes.
struct DomNode {
  int id = 0;
  std::string tag;
  std::vector<std::string> classes;
  std::vector<std::string> text;
  bool focused = false;
  bool tampered = false;
  std::optional<int> parent;
  std::vector<int> children;
  std::string html_id;

  bool operator==(const DomNode&) const = default;
};

class DomTree {
 public:
  DomTree() = default;
  explicit DomTree(std::vector<DomNode> nodes);

  int size() const { return static_cast<int>(nodes_.size()); }
  const DomNode& node(int id) const { return nodes_.at(id); }
  DomNode& node(int id) { return nodes_.at(id); }
  const std::vector<DomNode>& nodes() const { return nodes_; }

  // index of the unique node with no parent
  int root() const;

  // undirected parent/child edges, each pair once with first < second
  std::vector<std::pair<int, int>> edges() const;

  // first node matching an id="..." attribute, -1 if absent
  int find_by_html_id(std::string_view html_id) const;

  // checks the structural invariants: unique root, consistent links,
  // acyclic, connected, within the node cap. Throws on violation.
  void validate() const;

  bool operator==(const DomTree&) const = default;

 private:
  std::vector<DomNode> nodes_;
};

// row-major |V| x |V| boolean adjacency; M[i][j] <=> i,j are parent/child
std::vector<std::uint8_t> adjacency(const DomTree& tree);

// lowercases and splits into alphanumeric runs
std::vector<std::string> tokenize(std::string_view s);

// Parses the supported HTML subset into a tree. Preorder traversal of the
// result matches element order in the source. Throws ParseError with a
// byte offset on malformed input and TreeTooLarge past the node cap.
DomTree parse_html(std::string_view source, int max_doms = kMaxDoms);

// canonical document for a tree; parse(serialize_html(t)) == t for any
// freshly parsed t
std::string serialize_html(const DomTree& tree);

// full-fidelity JSON form (includes focused/tampered state)
std::string tree_to_json(const DomTree& tree);
DomTree tree_from_json(const std::string& json_text);

}  // namespace domq
