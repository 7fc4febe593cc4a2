#include "uuis/search.hpp"

#include <algorithm>
#include <cctype>
#include <functional>

namespace uuis {
namespace {

// ---------------------------------------------------------------------------
// Lexing and parsing

struct Token {
  enum class Kind { Word, String, LParen, RParen } kind;
  std::string text;
  std::size_t offset;
};

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_keyword(std::string_view w) {
  const auto l = lower(w);
  return l == "and" || l == "or" || l == "not";
}

bool is_operator(std::string_view w) { return w == "eq" || w == "contains" || w == "lt" || w == "gt"; }

[[noreturn]] void syntax_error(const std::string& msg, std::size_t token_index, std::size_t offset) {
  fail(ErrorCode::SyntaxError, msg + " at token " + std::to_string(token_index + 1),
       {{"token", token_index + 1}, {"offset", offset}});
}

std::vector<Token> lex(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '(' || c == ')') {
      out.push_back({c == '(' ? Token::Kind::LParen : Token::Kind::RParen, std::string(1, c), i});
      ++i;
    } else if (c == '"') {
      const auto start = i++;
      std::string text;
      bool closed = false;
      while (i < s.size()) {
        if (s[i] == '\\' && i + 1 < s.size()) {
          text += s[i + 1];
          i += 2;
        } else if (s[i] == '"') {
          ++i;
          closed = true;
          break;
        } else {
          text += s[i++];
        }
      }
      if (!closed) syntax_error("unterminated string", out.size(), start);
      out.push_back({Token::Kind::String, std::move(text), start});
    } else {
      const auto start = i;
      while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i])) && s[i] != '(' && s[i] != ')' &&
             s[i] != '"') {
        ++i;
      }
      out.push_back({Token::Kind::Word, std::string(s.substr(start, i - start)), start});
    }
  }
  return out;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens, std::size_t end) : t_(std::move(tokens)), end_(end) {}

  Query parse() {
    if (t_.empty()) syntax_error("empty query", 0, 0);
    auto q = expr();
    if (pos_ < t_.size()) syntax_error("unexpected '" + t_[pos_].text + "'", pos_, t_[pos_].offset);
    return q;
  }

 private:
  bool peek_word(std::string_view kw) const {
    return pos_ < t_.size() && t_[pos_].kind == Token::Kind::Word && lower(t_[pos_].text) == kw;
  }
  [[noreturn]] void unexpected(const std::string& expected) const {
    if (pos_ >= t_.size()) syntax_error("expected " + expected + " but the query ended", pos_, end_);
    syntax_error("expected " + expected + ", found '" + t_[pos_].text + "'", pos_, t_[pos_].offset);
  }

  Query expr() {
    std::vector<Query> ors{conjunction()};
    while (peek_word("or")) {
      ++pos_;
      ors.push_back(conjunction());
    }
    return ors.size() == 1 ? std::move(ors.front()) : Query::make_or(std::move(ors));
  }

  Query conjunction() {
    std::vector<Query> ands{term()};
    while (peek_word("and")) {
      ++pos_;
      ands.push_back(term());
    }
    return ands.size() == 1 ? std::move(ands.front()) : Query::make_and(std::move(ands));
  }

  Query term() {
    if (peek_word("not")) {
      ++pos_;
      return Query::make_not(primary());
    }
    return primary();
  }

  Query primary() {
    if (pos_ < t_.size() && t_[pos_].kind == Token::Kind::LParen) {
      ++pos_;
      auto q = expr();
      if (pos_ >= t_.size() || t_[pos_].kind != Token::Kind::RParen) unexpected("')'");
      ++pos_;
      return q;
    }
    return predicate();
  }

  Query predicate() {
    if (pos_ >= t_.size() || t_[pos_].kind != Token::Kind::Word || is_keyword(t_[pos_].text)) {
      unexpected("a field name");
    }
    const auto& field_tok = t_[pos_];
    Predicate p;
    const auto dot = field_tok.text.find('.');
    p.table = dot == std::string::npos ? "item" : field_tok.text.substr(0, dot);
    p.field = dot == std::string::npos ? field_tok.text : field_tok.text.substr(dot + 1);
    auto ident = [](const std::string& s) {
      return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
      });
    };
    if (!ident(p.table) || !ident(p.field)) {
      syntax_error("malformed field name '" + field_tok.text + "'", pos_, field_tok.offset);
    }
    ++pos_;
    if (pos_ >= t_.size() || t_[pos_].kind != Token::Kind::Word || !is_operator(t_[pos_].text)) {
      unexpected("an operator (eq, contains, lt, gt)");
    }
    p.op = t_[pos_++].text;
    if (pos_ >= t_.size() || (t_[pos_].kind != Token::Kind::Word && t_[pos_].kind != Token::Kind::String)) {
      unexpected("a value");
    }
    p.value = t_[pos_++].text;
    return Query::make_pred(std::move(p));
  }

  std::vector<Token> t_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

std::string render_value(const std::string& v) {
  const bool plain = !v.empty() && !is_keyword(v) && std::none_of(v.begin(), v.end(), [](char c) {
    return std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == '"' || c == '\\';
  });
  if (plain) return v;
  std::string out = "\"";
  for (char c : v) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

// ---------------------------------------------------------------------------
// Execution

constexpr std::size_t kFieldCodeLength = 15;

const std::set<std::string>& searchable_tables() {
  static const std::set<std::string> s = {"item", "loc", "bldg", "loctype", "affln", "cat",
                                          "title", "reqtype", "users", "request"};
  return s;
}

struct TablePlan {
  std::string code;
  std::vector<std::string> columns;
};

void collect_predicates(const Query& q, std::vector<const Predicate*>& out) {
  if (q.kind == Query::Kind::Pred) out.push_back(&q.pred);
  for (const auto& c : q.children) collect_predicates(c, out);
}

// Validates every predicate against the metadata and returns the target
// table and the caller's visible columns.
TablePlan plan(const Database& db, const Principal& who, const Query& q) {
  std::vector<const Predicate*> preds;
  collect_predicates(q, preds);
  const std::string table = preds.front()->table;
  for (const auto* p : preds) {
    if (p->table != table) {
      fail(ErrorCode::ValidationError, "a query may only address one table; found '" + table + "' and '" + p->table + "'");
    }
  }
  const auto* meta = db.table<TableMeta>().find_if([&](const TableMeta& t) { return t.table_code == table; });
  if (!meta || !searchable_tables().contains(table)) fail(ErrorCode::UnknownField, "unknown table '" + table + "'");
  if (!who.mask.covers(meta->permissions)) fail(ErrorCode::PermissionDenied, "table '" + table + "' is not searchable by you");

  std::map<std::string, FieldMeta> fields;
  TablePlan out{table, {}};
  db.table<FieldMeta>().for_each([&](const FieldMeta& f) {
    if (f.table_id != meta->table_id) return;
    fields.emplace(f.field_code, f);
    if (!f.forbidden && who.mask.covers(f.permissions)) out.columns.push_back(f.field_code);
  });
  if (table == "item") out.columns.push_back("cat");

  for (const auto* p : preds) {
    if (table == "item" && p->field == "cat") continue;
    auto it = fields.find(p->field.substr(0, kFieldCodeLength));
    if (it == fields.end()) fail(ErrorCode::UnknownField, "unknown field '" + table + "." + p->field + "'");
    if (it->second.forbidden || !who.mask.covers(it->second.permissions)) {
      fail(ErrorCode::PermissionDenied, "field '" + table + "." + p->field + "' is not searchable by you");
    }
    if (!is_operator(p->op)) fail(ErrorCode::SyntaxError, "unknown operator '" + p->op + "'");
  }
  return out;
}

bool in_scope_user(const Database& db, const Principal& who, UuisId user) {
  const auto affs = user_affiliations(db, user);
  return std::any_of(affs.begin(), affs.end(), [&](UuisId a) { return scope_contains(who.scope, a); });
}

// Metadata stores field codes cut to the column width; map them back.
template <class T>
const FieldSpec<T>* resolve_field(std::string_view code) {
  if (const auto* f = find_field<T>(code)) return f;
  if (code.size() < kFieldCodeLength) return nullptr;
  for (const auto& f : Schema<T>::fields()) {
    if (f.code.substr(0, kFieldCodeLength) == code) return &f;
  }
  return nullptr;
}

template <class T, class Visible, class Extra>
void scan(const Database& db, const Query& q, const TablePlan& plan, SearchResult& out, Visible&& visible,
          Extra&& extra) {
  std::vector<const Predicate*> preds;
  collect_predicates(q, preds);
  for (const auto* p : preds) {
    if (!find_field<T>(p->field) && !(plan.code == "item" && p->field == "cat")) {
      fail(ErrorCode::UnknownField, "unknown field '" + plan.code + "." + p->field + "'");
    }
  }
  std::vector<const FieldSpec<T>*> specs;
  for (std::size_t i = 0; i < plan.columns.size(); ++i) {
    specs.push_back(resolve_field<T>(plan.columns[i]));
    if (specs.back()) out.columns[i] = std::string(specs.back()->code);
  }
  db.table<T>().for_each([&](const T& rec) {
    if (!visible(rec)) return;
    auto value_of = [&](const Predicate& p) -> std::string {
      if (const auto* f = find_field<T>(p.field)) return f->get(rec);
      return extra(rec, p.field);
    };
    if (!evaluate(q, value_of)) return;
    std::vector<std::string> row;
    row.reserve(specs.size());
    for (std::size_t i = 0; i < specs.size(); ++i) {
      row.push_back(specs[i] ? specs[i]->get(rec) : extra(rec, plan.columns[i]));
    }
    out.keys.push_back(std::to_string(Schema<T>::key(rec)));
    out.rows.push_back(std::move(row));
  });
}

template <class T>
void field_meta(Transaction& txn, std::uint64_t table_id, PermissionMask perms,
                const std::map<std::string, PermissionMask>& overrides = {},
                const std::set<std::string>& forbidden = {}) {
  for (const auto& f : Schema<T>::fields()) {
    FieldMeta m;
    m.field_id = txn.table<FieldMeta>().max_key().value_or(0) + 1;
    m.table_id = table_id;
    m.field_code = std::string(f.code).substr(0, kFieldCodeLength);
    m.field_name = std::string(f.name).substr(0, 20);
    m.forbidden = forbidden.contains(m.field_code);
    auto it = overrides.find(m.field_code);
    m.permissions = m.forbidden ? PermissionMask::full() : (it != overrides.end() ? it->second : perms);
    txn.put(m);
  }
}

}  // namespace

Query parse_query(std::string_view text, std::size_t max_length) {
  if (text.size() > max_length) {
    fail(ErrorCode::ValidationError, "query longer than " + std::to_string(max_length) + " characters");
  }
  auto q = Parser(lex(text), text.size()).parse();
  if (query_depth(q) > kMaxQueryDepth) {
    fail(ErrorCode::SyntaxError, "query nested deeper than " + std::to_string(kMaxQueryDepth) + " levels");
  }
  return q;
}

std::string render_query(const Query& q) {
  auto child = [](const Query& c) {
    return c.kind == Query::Kind::And || c.kind == Query::Kind::Or || c.kind == Query::Kind::Not
               ? "(" + render_query(c) + ")"
               : render_query(c);
  };
  switch (q.kind) {
    case Query::Kind::Pred:
      return q.pred.table + "." + q.pred.field + " " + q.pred.op + " " + render_value(q.pred.value);
    case Query::Kind::Not:
      return "not " + child(q.children.front());
    case Query::Kind::And:
    case Query::Kind::Or: {
      std::string out;
      const char* sep = q.kind == Query::Kind::And ? " and " : " or ";
      for (std::size_t i = 0; i < q.children.size(); ++i) {
        if (i) out += sep;
        out += child(q.children[i]);
      }
      return out;
    }
  }
  return {};
}

std::size_t query_depth(const Query& q) {
  std::size_t d = 0;
  for (const auto& c : q.children) d = std::max(d, query_depth(c));
  return d + 1;
}

nlohmann::json query_to_json(const Query& q) {
  switch (q.kind) {
    case Query::Kind::Pred:
      return {{"field", q.pred.table + "." + q.pred.field}, {"op", q.pred.op}, {"value", q.pred.value}};
    case Query::Kind::Not:
      return {{"not", query_to_json(q.children.front())}};
    case Query::Kind::And:
    case Query::Kind::Or: {
      auto arr = nlohmann::json::array();
      for (const auto& c : q.children) arr.push_back(query_to_json(c));
      return {{q.kind == Query::Kind::And ? "and" : "or", arr}};
    }
  }
  return nullptr;
}

Query query_from_json(const nlohmann::json& j) {
  auto from = [](const nlohmann::json& n, std::size_t depth, auto& self) -> Query {
    if (depth > kMaxQueryDepth) fail(ErrorCode::SyntaxError, "query nested too deeply");
    if (!n.is_object() || n.size() != (n.contains("field") ? 3u : 1u)) {
      fail(ErrorCode::SyntaxError, "query node must be {and|or: [...]}, {not: ...} or {field, op, value}");
    }
    if (n.contains("not")) return Query::make_not(self(n["not"], depth + 1, self));
    for (const char* k : {"and", "or"}) {
      if (!n.contains(k)) continue;
      if (!n[k].is_array() || n[k].size() < 2) fail(ErrorCode::SyntaxError, std::string(k) + " needs two or more children");
      std::vector<Query> kids;
      for (const auto& c : n[k]) kids.push_back(self(c, depth + 1, self));
      return std::string(k) == "and" ? Query::make_and(std::move(kids)) : Query::make_or(std::move(kids));
    }
    if (!n.contains("op") || !n.contains("value") || !n["field"].is_string() || !n["op"].is_string() ||
        !n["value"].is_string()) {
      fail(ErrorCode::SyntaxError, "predicate needs string field, op and value");
    }
    Predicate p;
    const auto field = n["field"].get<std::string>();
    const auto dot = field.find('.');
    p.table = dot == std::string::npos ? "item" : field.substr(0, dot);
    p.field = dot == std::string::npos ? field : field.substr(dot + 1);
    p.op = n["op"].get<std::string>();
    p.value = n["value"].get<std::string>();
    if (!is_operator(p.op)) fail(ErrorCode::SyntaxError, "unknown operator '" + p.op + "'");
    return Query::make_pred(std::move(p));
  };
  return from(j, 1, from);
}

bool evaluate(const Query& q, const std::function<std::string(const Predicate&)>& value_of) {
  switch (q.kind) {
    case Query::Kind::Pred: return facet_matches(value_of(q.pred), q.pred.op, q.pred.value);
    case Query::Kind::Not: return !evaluate(q.children.front(), value_of);
    case Query::Kind::And:
      return std::all_of(q.children.begin(), q.children.end(), [&](const Query& c) { return evaluate(c, value_of); });
    case Query::Kind::Or:
      return std::any_of(q.children.begin(), q.children.end(), [&](const Query& c) { return evaluate(c, value_of); });
  }
  return false;
}

void seed_search_metadata(Transaction& txn) {
  using P = Permission;
  std::uint64_t next_table = txn.table<TableMeta>().max_key().value_or(0);
  auto table = [&](std::string_view code, std::string_view name, PermissionMask perms) {
    TableMeta t{++next_table, std::string(code), std::string(name).substr(0, 15), perms};
    txn.put(t);
    return t.table_id;
  };
  const PermissionMask open{};
  field_meta<Item>(txn, table("item", "Items", {P::ViewOwn}), {P::ViewOwn});
  field_meta<Location>(txn, table("loc", "Locations", open), open);
  field_meta<Building>(txn, table("bldg", "Buildings", open), open);
  field_meta<LocationType>(txn, table("loctype", "Location types", open), open);
  field_meta<Affiliation>(txn, table("affln", "Affiliations", open), open);
  field_meta<Category>(txn, table("cat", "Categories", open), open);
  field_meta<Title>(txn, table("title", "Titles", open), open);
  field_meta<RequestType>(txn, table("reqtype", "Request types", open), open);
  const PermissionMask manage{P::ManageUsers};
  field_meta<User>(txn, table("users", "Users", {P::ViewOwn}), {P::ViewOwn},
                   {{"login_attempts", manage}, {"must_change_password", manage}, {"date_modified", manage}},
                   {"password"});
  field_meta<Request>(txn, table("request", "Requests", {P::SubmitRequest}), {P::SubmitRequest});
}

// ---------------------------------------------------------------------------

SearchResult Search::simple_search(const std::string& token, std::string_view text) {
  const auto who = auth_.authorize(token);
  const auto trimmed = [&] {
    const auto b = text.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return std::string_view{};
    return text.substr(b, text.find_last_not_of(" \t\r\n") - b + 1);
  }();
  if (trimmed.empty()) fail(ErrorCode::ValidationError, "enter something to search for");
  if (trimmed.size() > ctx_.config().max_query_length) fail(ErrorCode::ValidationError, "search text is too long");

  if (!who.grants(Permission::ViewOwn)) return SearchResult{"item", {}, {}, {}};
  std::vector<Query> ors;
  for (const char* f : {"item_description", "code", "serial_number", "cat"}) {
    ors.push_back(Query::make_pred({"item", f, "contains", std::string(trimmed)}));
  }
  return advanced_search(token, Query::make_or(std::move(ors)));
}

SearchResult Search::advanced_search(const std::string& token, std::string_view query_text) {
  return advanced_search(token, parse_query(query_text, ctx_.config().max_query_length));
}

SearchResult Search::advanced_search(const std::string& token, const Query& query) {
  const auto who = auth_.authorize(token);
  if (query_depth(query) > kMaxQueryDepth) fail(ErrorCode::SyntaxError, "query nested too deeply");
  auto snap = ctx_.store().snapshot();
  const auto& db = snap.db();
  const auto p = plan(db, who, query);
  SearchResult out;
  out.table = p.code;
  out.columns = p.columns;
  const bool everything = who.level == PermissionLevel::L3;
  auto all = [](const auto&) { return true; };
  auto none = [](const auto&, const std::string&) { return std::string(); };

  if (p.code == "item") {
    ItemVisibility visible(db, who);
    scan<Item>(db, query, p, out, [&](const Item& i) { return visible(i); },
               [&](const Item& i, const std::string&) {
                 const auto* c = db.find<Category>(i.cat_id);
                 return c ? c->description : std::string();
               });
  } else if (p.code == "users") {
    scan<User>(db, query, p, out,
               [&](const User& u) {
                 return everything || u.user_id == who.user_id ||
                        (who.grants(Permission::ManageUsers) && in_scope_user(db, who, u.user_id));
               },
               none);
  } else if (p.code == "request") {
    scan<Request>(db, query, p, out,
                  [&](const Request& r) {
                    return everything || r.requester == who.user_id || r.submitted_by == who.user_id ||
                           (who.level_int() >= 1 && in_scope_user(db, who, r.requester));
                  },
                  none);
  } else if (p.code == "loc") {
    scan<Location>(db, query, p, out, all, none);
  } else if (p.code == "bldg") {
    scan<Building>(db, query, p, out, all, none);
  } else if (p.code == "loctype") {
    scan<LocationType>(db, query, p, out, all, none);
  } else if (p.code == "affln") {
    scan<Affiliation>(db, query, p, out, all, none);
  } else if (p.code == "cat") {
    scan<Category>(db, query, p, out, all, none);
  } else if (p.code == "title") {
    scan<Title>(db, query, p, out, all, none);
  } else if (p.code == "reqtype") {
    scan<RequestType>(db, query, p, out, all, none);
  }
  return out;
}

}  // namespace uuis
