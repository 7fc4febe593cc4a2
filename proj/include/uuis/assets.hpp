#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "uuis/auth.hpp"

namespace uuis {

struct AssetFilter {
  std::optional<UuisId> loc_id;
  std::optional<UuisId> owner_id;
  std::optional<UuisId> cat_id;
  std::optional<UuisId> group_id;
  std::optional<ItemStatus> status;
  std::string text;  // substring of description, code or serial
};

struct NewAsset {
  std::string item_description;
  std::string code;
  std::string serial_number;
  UuisId cat_id;
  UuisId owner_id;
  UuisId loc_id;
  std::vector<std::pair<UuisId, std::string>> properties;  // (prop_id, value)
};

const std::vector<std::string>& asset_import_header();

struct AssetImportReport {
  std::vector<UuisId> created_ids;
};

enum class GroupResolution : std::uint8_t {
  NoOp,             // selection is exactly one existing group
  CreateGroup,      // nothing selected is grouped
  ShrinkGroup,      // selection is a strict subset of one group
  RefuseHidden,     // as ShrinkGroup, but the remainder has items the caller cannot see
  MergeGroups,      // selection is whole groups (plus ungrouped items)
  SplitAndRegroup,  // selection cuts through groups
};
std::string_view to_string(GroupResolution r);

// Group membership of the selection's neighbourhood.
struct GroupingInput {
  std::set<UuisId> selected;
  std::map<UuisId, std::set<UuisId>> groups;  // every group touched by the selection, all members
  std::set<UuisId> hidden;                    // members the caller cannot see
};

GroupResolution resolve_grouping(const GroupingInput& in);

struct GroupOutcome {
  GroupResolution resolution = GroupResolution::NoOp;
  std::optional<UuisId> group_id;  // group the selection ends up in
  std::vector<UuisId> changed;     // items whose group_id changed
};

// "loc_id=...;owner_id=...;..." snapshot written to item logs; audit replay
// reads it back.
std::string item_state(const Item& item);
std::map<std::string, std::string> parse_item_state(std::string_view content);

// Effects shared with request approval. Both run inside the caller's
// transaction and write one item log.
InventoryEntry checkout_in(Transaction& txn, UuisId actor, UuisId item_id);
InventoryEntry return_in(Transaction& txn, UuisId actor, UuisId item_id);
Item transfer_in(Transaction& txn, UuisId actor, UuisId item_id, std::optional<UuisId> loc_id,
                 std::optional<UuisId> owner_id, std::string_view note);

class Assets {
 public:
  Assets(Context& ctx, Auth& auth) : ctx_(ctx), auth_(auth) {}

  std::vector<Item> view_assets(const std::string& token, const AssetFilter& filter = {});
  Item get_asset(const std::string& token, UuisId item_id);
  std::vector<ItemProperty> properties_of(const std::string& token, UuisId item_id);

  Category add_category(const std::string& token, const std::string& description,
                        std::optional<UuisId> parent = std::nullopt);
  PropertyDef add_property(const std::string& token, UuisId cat_id, const std::string& name,
                           const std::string& default_value = "");

  Item add_asset(const std::string& token, const NewAsset& asset);
  // Edit keys: item fields (item_description, code, serial_number, cat_id,
  // owner_id, loc_id, status) and "prop:<name>".
  std::vector<Item> update_assets(const std::string& token, const std::vector<UuisId>& targets,
                                  const std::map<std::string, std::string>& edits);
  AssetImportReport bulk_add_assets(const std::string& token, std::string_view csv_text);

  GroupOutcome group_assets(const std::string& token, const std::vector<UuisId>& selected, bool confirm);

  InventoryEntry checkout_item(const std::string& token, UuisId item_id);
  InventoryEntry return_item(const std::string& token, UuisId item_id);
  InventoryEntry inventory_of(UuisId item_id) const;

 private:
  Item insert_asset(Transaction& txn, const Principal& who, const NewAsset& a,
                    std::set<std::string>& serials, std::set<std::string>& codes);

  Context& ctx_;
  Auth& auth_;
};

}  // namespace uuis
