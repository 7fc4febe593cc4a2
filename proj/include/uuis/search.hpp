#pragma once

// Boolean search over the registered tables.
//
//   expr      := term (("and" | "or") term)*      "and" binds tighter
//   term      := ["not"] (predicate | "(" expr ")")
//   predicate := field op value
//   field     := table "." field | field           bare fields mean item.<field>
//   op        := eq | contains | lt | gt
//   value     := word | "quoted \"text\""
//
// Keywords are case-insensitive. Items also expose a virtual field "cat"
// holding the category description.

#include <string>
#include <vector>

#include "uuis/audit.hpp"

namespace uuis {

struct Predicate {
  std::string table;
  std::string field;
  std::string op;
  std::string value;
  bool operator==(const Predicate&) const = default;
};

struct Query {
  enum class Kind : std::uint8_t { And, Or, Not, Pred };
  Kind kind = Kind::Pred;
  std::vector<Query> children;
  Predicate pred;

  static Query make_and(std::vector<Query> c) { return {Kind::And, std::move(c), {}}; }
  static Query make_or(std::vector<Query> c) { return {Kind::Or, std::move(c), {}}; }
  static Query make_not(Query c) { return {Kind::Not, {std::move(c)}, {}}; }
  static Query make_pred(Predicate p) { return {Kind::Pred, {}, std::move(p)}; }
  bool operator==(const Query&) const = default;
};

inline constexpr std::size_t kMaxQueryDepth = 8;

// Throws SyntaxError (details: token, offset) or ValidationError for
// over-long input.
Query parse_query(std::string_view text, std::size_t max_length = 1024);
std::string render_query(const Query& q);
std::size_t query_depth(const Query& q);

nlohmann::json query_to_json(const Query& q);
Query query_from_json(const nlohmann::json& j);

// Evaluates against one row; `value_of(field)` yields the row's text value.
bool evaluate(const Query& q, const std::function<std::string(const Predicate&)>& value_of);

struct SearchResult {
  std::string table;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;  // primary key ascending
  std::vector<std::string> keys;

  Tabular tabular() const { return {columns, rows}; }
};

// Writes table and field metadata for every searchable table.
void seed_search_metadata(Transaction& txn);

class Search {
 public:
  Search(Context& ctx, Auth& auth) : ctx_(ctx), auth_(auth) {}

  // Or of contains-predicates over the item text fields.
  SearchResult simple_search(const std::string& token, std::string_view text);
  SearchResult advanced_search(const std::string& token, const Query& query);
  SearchResult advanced_search(const std::string& token, std::string_view query_text);

 private:
  Context& ctx_;
  Auth& auth_;
};

}  // namespace uuis
