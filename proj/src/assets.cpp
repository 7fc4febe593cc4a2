#include "uuis/assets.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

#include "uuis/csv.hpp"
#include "uuis/directory.hpp"

namespace uuis {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool owner_exists(const Database& db, UuisId id) {
  return (id.family() == Family::Affiliation && db.find<Affiliation>(id)) ||
         (id.family() == Family::Person && db.find<User>(id));
}

const Category* find_category(const Database& db, std::string_view code) {
  if (auto id = UuisId::try_parse(code); id && id->family() == Family::Catalog) {
    if (const auto* c = db.find<Category>(*id)) return c;
  }
  return db.table<Category>().find_if([&](const Category& c) { return c.description == code; });
}

const PropertyDef* find_property(const Database& db, UuisId cat_id, std::string_view name) {
  return db.table<PropertyDef>().find_if(
      [&](const PropertyDef& p) { return p.cat_id == cat_id && p.prop_name == name; });
}

const ItemProperty* find_item_property(const Database& db, UuisId item_id, UuisId prop_id) {
  return db.table<ItemProperty>().find_if(
      [&](const ItemProperty& p) { return p.item_id == item_id && p.prop_id == prop_id; });
}

InventoryEntry inventory_row(const Transaction& txn, UuisId item_id) {
  if (const auto* inv = txn.find<InventoryEntry>(item_id)) return *inv;
  return InventoryEntry{item_id, 1, 0, InventoryStatus::Available, {}, {}};
}

void log_item(Transaction& txn, UuisId actor, const Item& item, std::string_view event_type,
              std::string_view note) {
  txn.log(actor, item.item_id, event_type, item_state(item) + "|" + std::string(note));
}

}  // namespace

const std::vector<std::string>& asset_import_header() {
  static const std::vector<std::string> h = {"item_description", "code",    "serial_number",
                                             "cat_code",         "owner_id", "loc_code"};
  return h;
}

std::string_view to_string(GroupResolution r) {
  switch (r) {
    case GroupResolution::NoOp: return "NoOp";
    case GroupResolution::CreateGroup: return "CreateGroup";
    case GroupResolution::ShrinkGroup: return "ShrinkGroup";
    case GroupResolution::RefuseHidden: return "RefuseHidden";
    case GroupResolution::MergeGroups: return "MergeGroups";
    case GroupResolution::SplitAndRegroup: return "SplitAndRegroup";
  }
  return "?";
}

GroupResolution resolve_grouping(const GroupingInput& in) {
  if (in.groups.empty()) return GroupResolution::CreateGroup;
  std::size_t grouped = 0;
  bool all_whole = true;
  for (const auto& [gid, members] : in.groups) {
    for (auto m : members) {
      if (in.selected.contains(m)) ++grouped;
      else all_whole = false;
    }
  }
  const bool has_ungrouped = grouped < in.selected.size();

  if (!has_ungrouped && in.groups.size() == 1) {
    if (all_whole) return GroupResolution::NoOp;
    for (auto m : in.groups.begin()->second) {
      if (!in.selected.contains(m) && in.hidden.contains(m)) return GroupResolution::RefuseHidden;
    }
    return GroupResolution::ShrinkGroup;
  }
  return all_whole ? GroupResolution::MergeGroups : GroupResolution::SplitAndRegroup;
}

std::string item_state(const Item& item) {
  return "loc_id=" + item.loc_id.str() + ";owner_id=" + item.owner_id.str() +
         ";status=" + std::string(enum_name(item.status)) +
         ";group_id=" + (item.group_id ? item.group_id->str() : "") + ";cat_id=" + item.cat_id.str();
}

std::map<std::string, std::string> parse_item_state(std::string_view content) {
  std::map<std::string, std::string> out;
  content = content.substr(0, content.find('|'));
  while (!content.empty()) {
    const auto semi = content.find(';');
    const auto part = content.substr(0, semi);
    const auto eq = part.find('=');
    if (eq == std::string_view::npos) break;
    out.emplace(std::string(part.substr(0, eq)), std::string(part.substr(eq + 1)));
    if (semi == std::string_view::npos) break;
    content.remove_prefix(semi + 1);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Effects

InventoryEntry checkout_in(Transaction& txn, UuisId actor, UuisId item_id) {
  Item item = txn.get<Item>(item_id);
  auto inv = inventory_row(txn, item_id);
  if (item.status == ItemStatus::Retired || inv.qty == 0) {
    fail(ErrorCode::NotAvailable, "item " + item_id.str() + " is not available", {{"qty", inv.qty}});
  }
  inv.qty -= 1;
  inv.qty_out += 1;
  inv.modified_by = actor;
  inv.date_modified = txn.now();
  if (inv.qty == 0) {
    inv.status = InventoryStatus::CheckedOut;
    item.status = ItemStatus::CheckedOut;
    item.date_modified = txn.now();
    txn.put(item);
  }
  txn.put(inv);
  log_item(txn, actor, item, event::Update, "checkout qty=" + std::to_string(inv.qty));
  return inv;
}

InventoryEntry return_in(Transaction& txn, UuisId actor, UuisId item_id) {
  Item item = txn.get<Item>(item_id);
  auto inv = inventory_row(txn, item_id);
  if (inv.qty_out == 0) fail(ErrorCode::NotCheckedOut, "item " + item_id.str() + " is not checked out");
  inv.qty += 1;
  inv.qty_out -= 1;
  inv.status = InventoryStatus::Available;
  inv.modified_by = actor;
  inv.date_modified = txn.now();
  if (item.status == ItemStatus::CheckedOut) {
    item.status = ItemStatus::Available;
    item.date_modified = txn.now();
    txn.put(item);
  }
  txn.put(inv);
  log_item(txn, actor, item, event::Update, "return qty=" + std::to_string(inv.qty));
  return inv;
}

Item transfer_in(Transaction& txn, UuisId actor, UuisId item_id, std::optional<UuisId> loc_id,
                 std::optional<UuisId> owner_id, std::string_view note) {
  Item item = txn.get<Item>(item_id);
  if (loc_id) {
    if (!txn.find<Location>(*loc_id)) fail(ErrorCode::UnknownReference, "unknown location " + loc_id->str());
    item.loc_id = *loc_id;
  }
  if (owner_id) {
    if (!owner_exists(txn.db(), *owner_id)) fail(ErrorCode::UnknownReference, "unknown owner " + owner_id->str());
    item.owner_id = *owner_id;
  }
  item.date_modified = txn.now();
  txn.put(item);
  log_item(txn, actor, item, event::Update, note);
  return item;
}

// ---------------------------------------------------------------------------
// Reads

std::vector<Item> Assets::view_assets(const std::string& token, const AssetFilter& f) {
  const auto who = auth_.authorize(token);
  auto snap = ctx_.store().snapshot();
  ItemVisibility visible(snap.db(), who);
  const auto needle = lower(f.text);
  std::vector<Item> out;
  snap.table<Item>().for_each([&](const Item& item) {
    if (f.loc_id && item.loc_id != *f.loc_id) return;
    if (f.owner_id && item.owner_id != *f.owner_id) return;
    if (f.cat_id && item.cat_id != *f.cat_id) return;
    if (f.group_id && item.group_id != f.group_id) return;
    if (f.status && item.status != *f.status) return;
    if (!needle.empty() && lower(item.item_description).find(needle) == std::string::npos &&
        lower(item.code).find(needle) == std::string::npos &&
        lower(item.serial_number).find(needle) == std::string::npos) {
      return;
    }
    if (visible(item)) out.push_back(item);
  });
  return out;
}

Item Assets::get_asset(const std::string& token, UuisId item_id) {
  const auto who = auth_.authorize(token);
  auto snap = ctx_.store().snapshot();
  const auto* item = snap.find<Item>(item_id);
  if (!item) fail(ErrorCode::NotFound, "no item " + item_id.str());
  if (!can_view_item(snap.db(), who, *item)) fail(ErrorCode::PermissionDenied, "item not visible");
  return *item;
}

std::vector<ItemProperty> Assets::properties_of(const std::string& token, UuisId item_id) {
  get_asset(token, item_id);
  std::vector<ItemProperty> out;
  ctx_.store().snapshot().table<ItemProperty>().for_each([&](const ItemProperty& p) {
    if (p.item_id == item_id) out.push_back(p);
  });
  return out;
}

InventoryEntry Assets::inventory_of(UuisId item_id) const {
  auto snap = ctx_.store().snapshot();
  if (!snap.find<Item>(item_id)) fail(ErrorCode::NotFound, "no item " + item_id.str());
  if (const auto* inv = snap.find<InventoryEntry>(item_id)) return *inv;
  return InventoryEntry{item_id, 1, 0, InventoryStatus::Available, {}, {}};
}

// ---------------------------------------------------------------------------
// Catalog

Category Assets::add_category(const std::string& token, const std::string& description,
                              std::optional<UuisId> parent) {
  const auto who = auth_.authorize(token);
  require(who, Permission::ManageAssets);
  return ctx_.run("add_category", {{"description", description}}, [&](Transaction& txn) {
    if (description.empty()) fail(ErrorCode::ValidationError, "category description is required");
    if (parent && !txn.find<Category>(*parent)) fail(ErrorCode::UnknownReference, "unknown parent category");
    txn.claim("category:" + description);
    if (find_category(txn.db(), description)) fail(ErrorCode::DuplicateName, "category '" + description + "' exists");
    Category c{txn.allocate(Family::Catalog), parent, ""};
    find_field<Category>("description")->set(c, description);
    txn.put(c);
    txn.log(who.user_id, c.cat_id, event::Create, "category " + description);
    return c;
  });
}

PropertyDef Assets::add_property(const std::string& token, UuisId cat_id, const std::string& name,
                                 const std::string& default_value) {
  const auto who = auth_.authorize(token);
  require(who, Permission::ManageAssets);
  return ctx_.run("add_property", {{"name", name}}, [&](Transaction& txn) {
    if (name.empty()) fail(ErrorCode::ValidationError, "property name is required");
    if (!txn.find<Category>(cat_id)) fail(ErrorCode::UnknownReference, "unknown category " + cat_id.str());
    txn.claim("property:" + cat_id.str() + ":" + name);
    if (find_property(txn.db(), cat_id, name)) fail(ErrorCode::DuplicateName, "property '" + name + "' exists");
    PropertyDef p{txn.allocate(Family::Catalog), cat_id, "", ""};
    find_field<PropertyDef>("prop_name")->set(p, name);
    find_field<PropertyDef>("default_value")->set(p, default_value);
    txn.put(p);
    txn.log(who.user_id, p.prop_id, event::Create, "property " + name);
    return p;
  });
}

// ---------------------------------------------------------------------------
// Adding and editing

Item Assets::insert_asset(Transaction& txn, const Principal& who, const NewAsset& a,
                          std::set<std::string>& serials, std::set<std::string>& codes) {
  if (a.item_description.empty()) fail(ErrorCode::ValidationError, "item_description is required");
  if (a.code.empty()) fail(ErrorCode::ValidationError, "code is required");
  if (!txn.find<Category>(a.cat_id)) fail(ErrorCode::UnknownReference, "unknown category " + a.cat_id.str());
  if (!txn.find<Location>(a.loc_id)) fail(ErrorCode::UnknownReference, "unknown location " + a.loc_id.str());
  if (!owner_exists(txn.db(), a.owner_id)) fail(ErrorCode::UnknownReference, "unknown owner " + a.owner_id.str());

  Item item;
  item.item_id = txn.allocate(Family::Item);
  find_field<Item>("item_description")->set(item, a.item_description);
  find_field<Item>("code")->set(item, a.code);
  find_field<Item>("serial_number")->set(item, a.serial_number);
  item.cat_id = a.cat_id;
  item.owner_id = a.owner_id;
  item.loc_id = a.loc_id;
  item.date_modified = txn.now();
  item.status = ItemStatus::Available;

  txn.claim("item_code:" + a.code);
  if (!codes.insert(a.code).second) fail(ErrorCode::ValidationError, "code '" + a.code + "' is in use");
  if (!a.serial_number.empty()) {
    txn.claim("serial:" + a.serial_number);
    if (!serials.insert(a.serial_number).second) {
      fail(ErrorCode::DuplicateSerial, "serial number '" + a.serial_number + "' is in use");
    }
  }

  std::set<UuisId> seen_props;
  for (const auto& [prop_id, value] : a.properties) {
    const auto* def = txn.find<PropertyDef>(prop_id);
    if (!def || def->cat_id != a.cat_id) {
      fail(ErrorCode::UnknownReference, "property " + prop_id.str() + " does not belong to the category");
    }
    if (!seen_props.insert(prop_id).second) fail(ErrorCode::ValidationError, "property given twice");
    ItemProperty ip{txn.allocate(Family::ItemProperty), item.item_id, prop_id, ""};
    find_field<ItemProperty>("prop_value")->set(ip, value);
    txn.put(ip);
  }

  txn.put(item);
  txn.put(InventoryEntry{item.item_id, 1, 0, InventoryStatus::Available, who.user_id, txn.now()});
  log_item(txn, who.user_id, item, event::Create, "asset " + a.code);
  return item;
}

namespace {

void collect_keys(const Database& db, std::set<std::string>& serials, std::set<std::string>& codes) {
  db.table<Item>().for_each([&](const Item& i) {
    codes.insert(i.code);
    if (!i.serial_number.empty()) serials.insert(i.serial_number);
  });
}

}  // namespace

Item Assets::add_asset(const std::string& token, const NewAsset& asset) {
  const auto who = auth_.authorize(token);
  require(who, Permission::ManageAssets);
  nlohmann::json payload = {{"code", asset.code}, {"serial_number", asset.serial_number}};
  return ctx_.run("add_asset", payload, [&](Transaction& txn) {
    std::set<std::string> serials, codes;
    collect_keys(txn.db(), serials, codes);
    return insert_asset(txn, who, asset, serials, codes);
  });
}

std::vector<Item> Assets::update_assets(const std::string& token, const std::vector<UuisId>& targets,
                                        const std::map<std::string, std::string>& edits) {
  const auto who = auth_.authorize(token);
  if (targets.empty()) fail(ErrorCode::EmptySelection, "no assets selected");
  require(who, Permission::ManageAssets);

  static const std::set<std::string> editable = {"item_description", "code",   "serial_number", "cat_id",
                                                 "owner_id",         "loc_id", "status"};
  for (const auto& [k, v] : edits) {
    if (!editable.contains(k) && !k.starts_with("prop:")) {
      fail(ErrorCode::ValidationError, "field '" + k + "' is not editable");
    }
  }
  const std::set<UuisId> target_set(targets.begin(), targets.end());
  if (target_set.size() > 1 && (edits.contains("serial_number") || edits.contains("code"))) {
    fail(ErrorCode::ValidationError, "serial_number and code are unique and cannot be set on several items");
  }

  nlohmann::json payload = {{"targets", targets.size()}, {"edits", edits}};
  return ctx_.run("update_assets", payload, [&](Transaction& txn) {
    std::vector<Item> out;
    ItemVisibility visible(txn.db(), who);
    for (auto id : target_set) {
      const auto* cur = txn.find<Item>(id);
      if (!cur) fail(ErrorCode::NotFound, "no item " + id.str());
      if (!visible(*cur)) fail(ErrorCode::PermissionDenied, "item " + id.str() + " is not visible to you");
    }
    for (auto id : target_set) {
      Item item = txn.get<Item>(id);
      for (const auto& [k, v] : edits) {
        if (k.starts_with("prop:")) continue;
        if (k == "status") {
          const auto st = parse_enum<ItemStatus>(v);
          if (!st || *st == ItemStatus::CheckedOut) fail(ErrorCode::ValidationError, "status must be Available or Retired");
          const auto inv = inventory_row(txn, id);
          if (*st == ItemStatus::Retired && inv.qty_out > 0) {
            fail(ErrorCode::ValidationError, "item " + id.str() + " is checked out");
          }
          if (*st == ItemStatus::Available && item.status == ItemStatus::CheckedOut) continue;
          item.status = *st;
          continue;
        }
        try {
          find_field<Item>(k)->set(item, v);
        } catch (const Error& e) {
          fail(ErrorCode::ValidationError, k + ": " + e.what());
        }
      }
      if (edits.contains("cat_id") && !txn.find<Category>(item.cat_id)) {
        fail(ErrorCode::UnknownReference, "unknown category " + item.cat_id.str());
      }
      if (edits.contains("loc_id") && !txn.find<Location>(item.loc_id)) {
        fail(ErrorCode::UnknownReference, "unknown location " + item.loc_id.str());
      }
      if (edits.contains("owner_id") && !owner_exists(txn.db(), item.owner_id)) {
        fail(ErrorCode::UnknownReference, "unknown owner " + item.owner_id.str());
      }
      if (edits.contains("code")) {
        if (item.code.empty()) fail(ErrorCode::ValidationError, "code is required");
        txn.claim("item_code:" + item.code);
        if (txn.table<Item>().find_if([&](const Item& o) { return o.item_id != id && o.code == item.code; })) {
          fail(ErrorCode::ValidationError, "code '" + item.code + "' is in use");
        }
      }
      if (edits.contains("serial_number") && !item.serial_number.empty()) {
        txn.claim("serial:" + item.serial_number);
        if (txn.table<Item>().find_if(
                [&](const Item& o) { return o.item_id != id && o.serial_number == item.serial_number; })) {
          fail(ErrorCode::ValidationError, "serial number '" + item.serial_number + "' is in use");
        }
      }
      for (const auto& [k, v] : edits) {
        if (!k.starts_with("prop:")) continue;
        const auto name = k.substr(5);
        const auto* def = find_property(txn.db(), item.cat_id, name);
        if (!def) fail(ErrorCode::UnknownReference, "category has no property '" + name + "'");
        ItemProperty ip = [&] {
          if (const auto* p = find_item_property(txn.db(), id, def->prop_id)) return *p;
          return ItemProperty{txn.allocate(Family::ItemProperty), id, def->prop_id, ""};
        }();
        find_field<ItemProperty>("prop_value")->set(ip, v);
        txn.put(ip);
      }
      item.date_modified = txn.now();
      txn.put(item);
      std::string fields;
      for (const auto& [k, v] : edits) fields += (fields.empty() ? "" : ",") + k;
      log_item(txn, who.user_id, item, event::Update, "edit " + fields);
      out.push_back(item);
    }
    return out;
  });
}

AssetImportReport Assets::bulk_add_assets(const std::string& token, std::string_view csv_text) {
  const auto who = auth_.authorize(token);
  require(who, Permission::ManageAssets);
  require(who, Permission::BulkImport);

  const auto records = csv::parse(csv_text);
  if (records.empty()) fail(ErrorCode::EmptyFile, "the file is empty");
  const auto& header = records.front().cells;
  const auto& fixed = asset_import_header();
  if (header.size() < fixed.size() || !std::equal(fixed.begin(), fixed.end(), header.begin())) {
    fail(ErrorCode::MalformedHeader,
         "header must start with: item_description,code,serial_number,cat_code,owner_id,loc_code");
  }
  std::vector<std::string> prop_names;
  for (std::size_t i = fixed.size(); i < header.size(); ++i) {
    if (!header[i].starts_with("prop:") || header[i].size() == 5 ||
        std::find(prop_names.begin(), prop_names.end(), header[i].substr(5)) != prop_names.end()) {
      fail(ErrorCode::MalformedHeader, "bad property column '" + header[i] + "'");
    }
    prop_names.push_back(header[i].substr(5));
  }

  return ctx_.run("bulk_add_assets", {{"rows", records.size() - 1}}, [&](Transaction& txn) {
    std::vector<RejectedRow> problems;
    std::vector<NewAsset> rows;
    for (std::size_t r = 1; r < records.size(); ++r) {
      const auto& rec = records[r];
      if (rec.cells.size() != header.size()) {
        problems.push_back({rec.line, "expected " + std::to_string(header.size()) + " columns", rec.cells});
        continue;
      }
      const auto& c = rec.cells;
      NewAsset a;
      a.item_description = c[0];
      a.code = c[1];
      a.serial_number = c[2];
      std::string reason;
      const auto* cat = find_category(txn.db(), c[3]);
      const auto owner = UuisId::try_parse(c[4]);
      const auto* loc = txn.table<Location>().find_if([&](const Location& l) { return l.loc_code == c[5]; });
      if (!cat) reason = "unknown cat_code";
      else if (!owner || !owner_exists(txn.db(), *owner)) reason = "unknown owner_id";
      else if (!loc) reason = "unknown loc_code";
      if (reason.empty()) {
        a.cat_id = cat->cat_id;
        a.owner_id = *owner;
        a.loc_id = loc->loc_id;
        for (std::size_t p = 0; p < prop_names.size(); ++p) {
          const auto& value = c[fixed.size() + p];
          if (value.empty()) continue;
          const auto* def = find_property(txn.db(), cat->cat_id, prop_names[p]);
          if (!def) {
            reason = "category has no property '" + prop_names[p] + "'";
            break;
          }
          a.properties.emplace_back(def->prop_id, value);
        }
      }
      if (!reason.empty()) {
        problems.push_back({rec.line, reason, rec.cells});
        continue;
      }
      rows.push_back(std::move(a));
    }

    AssetImportReport report;
    std::set<std::string> serials, codes;
    collect_keys(txn.db(), serials, codes);
    std::size_t row_index = 0;
    for (std::size_t r = 1; r < records.size() && problems.empty(); ++r, ++row_index) {
      try {
        report.created_ids.push_back(insert_asset(txn, who, rows[row_index], serials, codes).item_id);
      } catch (const Error& e) {
        problems.push_back({records[r].line, e.what(), records[r].cells});
      }
    }
    if (!problems.empty()) {
      nlohmann::json rejected = nlohmann::json::array();
      for (const auto& p : problems) rejected.push_back({{"line", p.line}, {"reason", p.reason}});
      fail(ErrorCode::RowFormatError,
           "line " + std::to_string(problems.front().line) + ": " + problems.front().reason,
           {{"rejected", rejected}});
    }
    txn.log(who.user_id, std::nullopt, event::Import,
            "assets created=" + std::to_string(report.created_ids.size()));
    return report;
  });
}

// ---------------------------------------------------------------------------
// Grouping

GroupOutcome Assets::group_assets(const std::string& token, const std::vector<UuisId>& selected, bool confirm) {
  const auto who = auth_.authorize(token);
  require(who, Permission::ManageAssets);
  if (selected.empty()) fail(ErrorCode::EmptySelection, "no assets selected");

  nlohmann::json payload = {{"selected", selected.size()}, {"confirm", confirm}};
  return ctx_.run("group_assets", payload, [&](Transaction& txn) {
    GroupingInput in;
    in.selected.insert(selected.begin(), selected.end());
    ItemVisibility visible(txn.db(), who);
    std::set<UuisId> touched;
    for (auto id : in.selected) {
      const auto* item = txn.find<Item>(id);
      if (!item) fail(ErrorCode::NotFound, "no item " + id.str());
      if (!visible(*item)) fail(ErrorCode::PermissionDenied, "item " + id.str() + " is not visible to you");
      if (item->group_id) touched.insert(*item->group_id);
    }
    if (!touched.empty()) {
      txn.table<Item>().for_each([&](const Item& item) {
        if (item.group_id && touched.contains(*item.group_id)) {
          in.groups[*item.group_id].insert(item.item_id);
          if (!visible(item)) in.hidden.insert(item.item_id);
        }
      });
    }
    for (auto g : touched) txn.claim("group:" + g.str());

    GroupOutcome out;
    out.resolution = resolve_grouping(in);
    nlohmann::json details = {{"resolution", to_string(out.resolution)}};
    switch (out.resolution) {
      case GroupResolution::NoOp:
        fail(ErrorCode::AlreadyGrouped, "the selection is already exactly one group",
             {{"resolution", "NoOp"}, {"group_id", in.groups.begin()->first.str()}});
      case GroupResolution::RefuseHidden:
        fail(ErrorCode::RefuseHidden, "the group contains items you cannot see", details);
      case GroupResolution::CreateGroup:
        if (in.selected.size() < 2) fail(ErrorCode::ValidationError, "a group needs at least two items");
        break;
      default:
        if (!confirm) fail(ErrorCode::ConfirmationRequired, "confirm to regroup", details);
    }

    std::map<UuisId, std::optional<UuisId>> target;  // item -> new group
    switch (out.resolution) {
      case GroupResolution::CreateGroup:
      case GroupResolution::SplitAndRegroup: {
        const auto gid = txn.allocate(Family::Catalog);
        txn.claim("group:" + gid.str());
        for (auto id : in.selected) target[id] = gid;
        out.group_id = gid;
        break;
      }
      case GroupResolution::ShrinkGroup: {
        const auto& [gid, members] = *in.groups.begin();
        for (auto m : members) {
          if (!in.selected.contains(m)) target[m] = std::nullopt;
        }
        out.group_id = gid;
        break;
      }
      case GroupResolution::MergeGroups: {
        const auto gid = in.groups.begin()->first;  // lowest id survives
        for (auto id : in.selected) target[id] = gid;
        out.group_id = gid;
        break;
      }
      default: break;
    }

    // Dissolve whatever would be left as a singleton.
    std::map<UuisId, std::vector<UuisId>> after;
    for (const auto& [gid, members] : in.groups) {
      for (auto m : members) {
        auto it = target.find(m);
        const auto g = it == target.end() ? std::optional<UuisId>(gid) : it->second;
        if (g) after[*g].push_back(m);
      }
    }
    for (auto id : in.selected) {
      if (!target.contains(id) || !target[id]) continue;
      auto& v = after[*target[id]];
      if (std::find(v.begin(), v.end(), id) == v.end()) v.push_back(id);
    }
    for (const auto& [gid, members] : after) {
      if (members.size() == 1) target[members.front()] = std::nullopt;
    }
    if (out.group_id && (!after.contains(*out.group_id) || after[*out.group_id].size() < 2)) {
      out.group_id.reset();
    }

    for (const auto& [id, gid] : target) {
      Item item = txn.get<Item>(id);
      if (item.group_id == gid) continue;
      item.group_id = gid;
      item.date_modified = txn.now();
      txn.put(item);
      log_item(txn, who.user_id, item, event::Update, std::string("group ") + std::string(to_string(out.resolution)));
      out.changed.push_back(id);
    }
    return out;
  });
}

// ---------------------------------------------------------------------------
// Checkout

InventoryEntry Assets::checkout_item(const std::string& token, UuisId item_id) {
  const auto who = auth_.authorize(token);
  require(who, Permission::ManageAssets);
  return ctx_.run("checkout_item", {{"item_id", item_id.str()}}, [&](Transaction& txn) {
    if (!can_view_item(txn.db(), who, txn.get<Item>(item_id))) {
      fail(ErrorCode::PermissionDenied, "item not visible");
    }
    return checkout_in(txn, who.user_id, item_id);
  });
}

InventoryEntry Assets::return_item(const std::string& token, UuisId item_id) {
  const auto who = auth_.authorize(token);
  require(who, Permission::ManageAssets);
  return ctx_.run("return_item", {{"item_id", item_id.str()}}, [&](Transaction& txn) {
    if (!can_view_item(txn.db(), who, txn.get<Item>(item_id))) {
      fail(ErrorCode::PermissionDenied, "item not visible");
    }
    return return_in(txn, who.user_id, item_id);
  });
}

}  // namespace uuis
