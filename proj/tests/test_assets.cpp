#include <doctest.h>

#include <random>

#include "scenarios.hpp"

using namespace uuis;
using uuis::test::error_of;
using uuis::test::Fixture;
using uuis::test::GroupingOracle;
using uuis::test::GroupVerdict;
using uuis::test::Partition;
using uuis::test::Catalog;
using uuis::test::verdict_of;

TEST_CASE("grouping: ungrouped selection forms a new group") {
  Catalog c;
  const auto out = c.f.sys->assets.group_assets(c.f.admin, c.ids({0, 1}), false);
  CHECK(out.resolution == GroupResolution::CreateGroup);
  REQUIRE(out.group_id);
  CHECK(out.group_id->family() == Family::Catalog);
  CHECK(c.partition() == Partition{{0, 1}});
}

TEST_CASE("grouping: the exact existing group is a no-op") {
  Catalog c;
  c.f.sys->assets.group_assets(c.f.admin, c.ids({0, 1}), false);
  CHECK(error_of([&] { c.f.sys->assets.group_assets(c.f.admin, c.ids({0, 1}), true); }) ==
        ErrorCode::AlreadyGrouped);
}

TEST_CASE("grouping: a strict subset shrinks the group to the selection") {
  Catalog c;
  auto& a = c.f.sys->assets;
  a.group_assets(c.f.admin, c.ids({0, 1, 2}), false);
  CHECK(error_of([&] { a.group_assets(c.f.admin, c.ids({0, 1}), false); }) == ErrorCode::ConfirmationRequired);
  CHECK(c.partition() == Partition{{0, 1, 2}});
  const auto out = a.group_assets(c.f.admin, c.ids({0, 1}), true);
  CHECK(out.resolution == GroupResolution::ShrinkGroup);
  CHECK(c.partition() == Partition{{0, 1}});
}

TEST_CASE("grouping: hidden remainder refuses the change") {
  Catalog c;
  c.f.sys->assets.group_assets(c.f.admin, c.ids({0, 2, 1}), false);  // 1 is owned by faculty 2
  c.f.user("tech", PermissionLevel::L1, c.fac1);
  const auto tech = c.f.login("tech");
  CHECK(error_of([&] { c.f.sys->assets.group_assets(tech, c.ids({0, 2}), true); }) == ErrorCode::RefuseHidden);
  CHECK(c.partition() == Partition{{0, 1, 2}});
  CHECK(error_of([&] { c.f.sys->assets.group_assets(tech, c.ids({0, 1}), true); }) == ErrorCode::PermissionDenied);
}

TEST_CASE("grouping: whole groups merge") {
  Catalog c;
  auto& a = c.f.sys->assets;
  a.group_assets(c.f.admin, c.ids({0, 1}), false);
  a.group_assets(c.f.admin, c.ids({2, 3}), false);
  CHECK(error_of([&] { a.group_assets(c.f.admin, c.ids({0, 1, 2, 3}), false); }) ==
        ErrorCode::ConfirmationRequired);
  const auto out = a.group_assets(c.f.admin, c.ids({0, 1, 2, 3, 4}), true);
  CHECK(out.resolution == GroupResolution::MergeGroups);
  CHECK(c.partition() == Partition{{0, 1, 2, 3, 4}});
}

TEST_CASE("grouping: a partial cut regroups the selection and dissolves singletons") {
  Catalog c;
  auto& a = c.f.sys->assets;
  a.group_assets(c.f.admin, c.ids({0, 1, 2}), false);
  a.group_assets(c.f.admin, c.ids({3, 4}), false);
  const auto out = a.group_assets(c.f.admin, c.ids({0, 3}), true);
  CHECK(out.resolution == GroupResolution::SplitAndRegroup);
  CHECK(c.partition() == Partition{{1, 2}, {0, 3}});
}

TEST_CASE("grouping matches the set-partition oracle over random sequences") {
  Catalog c;
  std::mt19937 rng(2024);
  for (int seq = 0; seq < 60; ++seq) {
    c.f.seed([&](Transaction& txn) {
      for (auto id : c.items) {
        auto it = txn.get<Item>(id);
        it.group_id.reset();
        txn.put(it);
      }
    });
    GroupingOracle model;
    for (int step = 0; step < 8; ++step) {
      std::set<int> sel;
      const int k = 1 + static_cast<int>(rng() % 5);
      while (static_cast<int>(sel.size()) < k) sel.insert(static_cast<int>(rng() % 8));
      const bool confirm = rng() % 4 != 0;
      const auto expected = model.apply(sel, confirm);
      const auto got = verdict_of(error_of([&] { c.f.sys->assets.group_assets(c.f.admin, c.ids(sel), confirm); }));
      REQUIRE(got.has_value());
      CHECK(static_cast<int>(*got) == static_cast<int>(expected));
      const auto part = c.partition();
      REQUIRE(part == model.partition());
      std::set<int> seen;
      for (const auto& g : part) {
        CHECK(g.size() >= 2);
        for (int i : g) CHECK(seen.insert(i).second);
      }
    }
  }
}

TEST_CASE("resolution is a pure function of the membership pattern") {
  GroupingInput in;
  const auto id = [](int n) { return UuisId::encode(Family::Item, n); };
  const auto g = [](int n) { return UuisId::encode(Family::Catalog, n); };
  in.selected = {id(1), id(2)};
  CHECK(resolve_grouping(in) == GroupResolution::CreateGroup);
  in.groups[g(1)] = {id(1), id(2)};
  CHECK(resolve_grouping(in) == GroupResolution::NoOp);
  in.groups[g(1)] = {id(1), id(2), id(3)};
  CHECK(resolve_grouping(in) == GroupResolution::ShrinkGroup);
  in.hidden = {id(3)};
  CHECK(resolve_grouping(in) == GroupResolution::RefuseHidden);
  in.hidden.clear();
  in.groups = {{g(1), {id(1)}}, {g(2), {id(2)}}};
  CHECK(resolve_grouping(in) == GroupResolution::MergeGroups);
  in.groups = {{g(1), {id(1), id(5)}}, {g(2), {id(2)}}};
  CHECK(resolve_grouping(in) == GroupResolution::SplitAndRegroup);
}

TEST_CASE("adding an asset records inventory, properties and a log") {
  Catalog c(0);
  auto& a = c.f.sys->assets;
  const auto ram = a.add_property(c.f.admin, c.cat, "ram", "8GB");
  const auto item = a.add_asset(c.f.admin, {"ThinkPad", "TP-1", "SN-1", c.cat, c.fac1, c.loc1, {{ram.prop_id, "16GB"}}});
  CHECK(item.item_id.family() == Family::Item);
  CHECK(item.status == ItemStatus::Available);
  const auto props = a.properties_of(c.f.admin, item.item_id);
  REQUIRE(props.size() == 1);
  CHECK(props[0].prop_value == "16GB");
  CHECK(a.inventory_of(item.item_id).qty == 1);
  const auto last = c.f.store().snapshot().logs().back();
  CHECK(last.event_type == "CREATE");
  CHECK(parse_item_state(last.content).at("loc_id") == c.loc1.str());

  CHECK(error_of([&] { a.add_asset(c.f.admin, {"Other", "TP-2", "SN-1", c.cat, c.fac1, c.loc1, {}}); }) ==
        ErrorCode::DuplicateSerial);
  CHECK(error_of([&] { a.add_asset(c.f.admin, {"Other", "TP-1", "SN-2", c.cat, c.fac1, c.loc1, {}}); }) ==
        ErrorCode::ValidationError);
  CHECK(error_of([&] { a.add_asset(c.f.admin, {"Other", "TP-3", "", c.cat, c.fac1, c.bldg, {}}); }) ==
        ErrorCode::UnknownReference);
  CHECK(error_of([&] { a.add_asset(c.f.admin, {"Other", "TP-4", "", c.cat, c.fac1, c.cat, {}}); }) ==
        ErrorCode::UnknownReference);
  CHECK(error_of([&] { a.add_asset(c.f.admin, {"", "TP-5", "", c.cat, c.fac1, c.loc1, {}}); }) ==
        ErrorCode::ValidationError);
  CHECK(error_of([&] { a.add_category(c.f.admin, "Laptop"); }) == ErrorCode::DuplicateName);
  CHECK(error_of([&] { a.add_property(c.f.admin, c.cat, "ram"); }) == ErrorCode::DuplicateName);

  c.f.user("student", PermissionLevel::L0, c.fac1);
  CHECK(error_of([&] { a.add_asset(c.f.login("student"), {"X", "X", "", c.cat, c.fac1, c.loc1, {}}); }) ==
        ErrorCode::PermissionDenied);
}

TEST_CASE("update applies field and property edits to every target") {
  Catalog c(3);
  auto& a = c.f.sys->assets;
  a.add_property(c.f.admin, c.cat, "color");
  const auto out = a.update_assets(c.f.admin, c.items, {{"loc_id", c.loc2.str()}, {"prop:color", "red"}});
  CHECK(out.size() == 3);
  for (auto id : c.items) {
    CHECK(c.f.get_item(id).loc_id == c.loc2);
    CHECK(a.properties_of(c.f.admin, id).front().prop_value == "red");
  }
  CHECK(error_of([&] { a.update_assets(c.f.admin, c.items, {{"serial_number", "Z"}}); }) ==
        ErrorCode::ValidationError);
  CHECK(error_of([&] { a.update_assets(c.f.admin, {c.items[0]}, {{"serial_number", "S1"}}); }) ==
        ErrorCode::ValidationError);
  CHECK(error_of([&] { a.update_assets(c.f.admin, {c.items[0]}, {{"item_id", "4000000001"}}); }) ==
        ErrorCode::ValidationError);
  CHECK(error_of([&] { a.update_assets(c.f.admin, {c.items[0]}, {{"prop:weight", "1"}}); }) ==
        ErrorCode::UnknownReference);
  CHECK(error_of([&] { a.update_assets(c.f.admin, {}, {{"loc_id", c.loc1.str()}}); }) == ErrorCode::EmptySelection);
  CHECK(error_of([&] { a.update_assets(c.f.admin, {c.items[0]}, {{"status", "CheckedOut"}}); }) ==
        ErrorCode::ValidationError);
  a.update_assets(c.f.admin, {c.items[0]}, {{"status", "Retired"}});
  CHECK(c.f.get_item(c.items[0]).status == ItemStatus::Retired);
  CHECK(error_of([&] { a.checkout_item(c.f.admin, c.items[0]); }) == ErrorCode::NotAvailable);
}

TEST_CASE("a failed multi-target update changes nothing") {
  Catalog c(3);
  c.f.user("tech", PermissionLevel::L1, c.fac1);
  const auto tech = c.f.login("tech");
  // items[1] belongs to faculty 2 and is invisible to tech.
  CHECK(error_of([&] { c.f.sys->assets.update_assets(tech, c.items, {{"item_description", "x"}}); }) ==
        ErrorCode::PermissionDenied);
  for (std::size_t i = 0; i < c.items.size(); ++i) CHECK(c.f.get_item(c.items[i]).item_description == "item" + std::to_string(i));
}

TEST_CASE("view_assets filters and respects visibility") {
  Catalog c(6);
  auto& a = c.f.sys->assets;
  CHECK(a.view_assets(c.f.admin).size() == 6);
  CHECK(a.view_assets(c.f.admin, {.loc_id = c.loc2}).size() == 3);
  CHECK(a.view_assets(c.f.admin, {.text = "ITEM3"}).size() == 1);
  CHECK(a.view_assets(c.f.admin, {.text = "s4"}).size() == 1);
  c.f.user("tech", PermissionLevel::L1, c.fac1);
  const auto tech = c.f.login("tech");
  const auto seen = a.view_assets(tech);
  CHECK(seen.size() == 3);
  for (const auto& it : seen) CHECK(it.owner_id == c.fac1);
  CHECK(error_of([&] { a.get_asset(tech, c.items[1]); }) == ErrorCode::PermissionDenied);
  CHECK(error_of([&] { a.get_asset(tech, UuisId::encode(Family::Item, 99999)); }) == ErrorCode::NotFound);

  const auto sid = c.f.user("stu", PermissionLevel::L0, c.fac1);
  CHECK(a.view_assets(c.f.login("stu")).empty());
  c.f.item("mine", "M1", sid, c.loc1, c.cat);
  CHECK(a.view_assets(c.f.login("stu")).size() == 1);
}

TEST_CASE("bulk asset import is all or nothing") {
  Catalog c(0);
  auto& a = c.f.sys->assets;
  a.add_property(c.f.admin, c.cat, "ram");
  const std::string header = "item_description,code,serial_number,cat_code,owner_id,loc_code,prop:ram\n";
  const auto good = header + "Laptop A,LA,SA,Laptop," + c.fac1.str() + ",R1,16GB\n" + "Laptop B,LB,SB," +
                    c.cat.str() + "," + c.fac2.str() + ",R2,\n";
  const auto report = a.bulk_add_assets(c.f.admin, good);
  CHECK(report.created_ids.size() == 2);
  const auto first = c.f.get_item(report.created_ids[0]);
  CHECK(first.item_description == "Laptop A");
  CHECK(first.owner_id == c.fac1);
  CHECK(a.properties_of(c.f.admin, first.item_id).front().prop_value == "16GB");
  CHECK(a.properties_of(c.f.admin, report.created_ids[1]).empty());

  const auto before = c.f.store().snapshot().table<Item>().size();
  for (const auto& bad : {header + "X,X1,,Laptop," + c.fac1.str() + ",R1,\nY,Y1,,Nope," + c.fac1.str() + ",R1,\n",
                          header + "X,X1,,Laptop," + c.fac1.str() + ",R1,\nY,Y1,SA,Laptop," + c.fac1.str() + ",R1,\n",
                          header + "X,X1,,Laptop," + c.fac1.str() + ",R1,\nY,X1,,Laptop," + c.fac1.str() + ",R1,\n",
                          header + "X,X1,,Laptop," + c.fac1.str() + ",R1,\nY,Y1\n",
                          header + "X,X1,,Laptop,123,R1,\n"}) {
    CHECK(error_of([&] { a.bulk_add_assets(c.f.admin, bad); }) == ErrorCode::RowFormatError);
    CHECK(c.f.store().snapshot().table<Item>().size() == before);
  }
  CHECK(error_of([&] { a.bulk_add_assets(c.f.admin, "code,desc\n"); }) == ErrorCode::MalformedHeader);
  CHECK(error_of([&] { a.bulk_add_assets(c.f.admin, header.substr(0, header.size() - 1) + ",extra\n"); }) ==
        ErrorCode::MalformedHeader);
  CHECK(error_of([&] { a.bulk_add_assets(c.f.admin, ""); }) == ErrorCode::EmptyFile);
}

TEST_CASE("checkout and return keep qty + qty_out constant") {
  Catalog c(4);
  auto& a = c.f.sys->assets;
  c.f.seed([&](Transaction& txn) {
    auto inv = txn.get<InventoryEntry>(c.items[0]);
    inv.qty = 3;
    txn.put(inv);
  });
  std::mt19937 rng(5);
  std::map<UuisId, std::pair<int, int>> model;
  for (auto id : c.items) model[id] = {id == c.items[0] ? 3 : 1, 0};
  for (int step = 0; step < 400; ++step) {
    const auto id = c.items[rng() % c.items.size()];
    auto& [qty, out] = model[id];
    if (rng() % 2) {
      const auto err = error_of([&] { a.checkout_item(c.f.admin, id); });
      if (qty == 0) {
        CHECK(err == ErrorCode::NotAvailable);
      } else {
        CHECK_FALSE(err);
        --qty;
        ++out;
      }
    } else {
      const auto err = error_of([&] { a.return_item(c.f.admin, id); });
      if (out == 0) {
        CHECK(err == ErrorCode::NotCheckedOut);
      } else {
        CHECK_FALSE(err);
        ++qty;
        --out;
      }
    }
    const auto inv = a.inventory_of(id);
    CHECK(static_cast<int>(inv.qty) == qty);
    CHECK(static_cast<int>(inv.qty_out) == out);
    CHECK((c.f.get_item(id).status == ItemStatus::CheckedOut) == (qty == 0));
  }
}

TEST_CASE("item state strings round trip") {
  Catalog c(1);
  const auto it = c.f.get_item(c.items[0]);
  const auto st = parse_item_state(item_state(it) + "|note with = and ;");
  CHECK(st.at("loc_id") == it.loc_id.str());
  CHECK(st.at("owner_id") == it.owner_id.str());
  CHECK(st.at("status") == "Available");
  CHECK(st.at("group_id").empty());
}
