#include "edh/worldsim/digest.hpp"

#include <algorithm>
#include <map>

#include "edh/util/error.hpp"
#include "edh/util/hash.hpp"

namespace edh::worldsim {

namespace {

Json container_json(const std::optional<int>& c) { return c ? Json(*c) : Json(nullptr); }

Json record_json(const ObjectRecord& o) {
  return Json{{"id", o.id},     {"type", o.type},   {"row", o.row},
              {"col", o.col},   {"slot", o.slot},   {"flags", flag_names(o.flags)},
              {"container", container_json(o.container)}};
}

Json pose_json(const AgentPose& a) {
  return Json{{"row", a.row}, {"col", a.col}, {"heading", std::string(to_string(a.heading))}, {"pan", a.pan}};
}

std::string canonical(const AgentPose& agent, const std::vector<ObjectRecord>& objects) {
  Json j;
  j["agent"] = pose_json(agent);
  j["objects"] = Json::array();
  for (const auto& o : objects) j["objects"].push_back(record_json(o));
  return j.dump();
}

// Field -> value view of one object, used for diffing.
std::map<std::string, Json> fields_of(const ObjectRecord& o) {
  std::map<std::string, Json> f;
  f["type"] = o.type;
  f["row"] = o.row;
  f["col"] = o.col;
  f["slot"] = o.slot;
  f["container"] = container_json(o.container);
  for (Flag fl : kAllFlags) f[std::string(flag_name(fl))] = (o.flags & fl) != 0;
  return f;
}

std::map<std::string, Json> fields_of(const AgentPose& a) {
  return {{"row", a.row}, {"col", a.col}, {"heading", std::string(to_string(a.heading))}, {"pan", a.pan}};
}

void diff_fields(int id, const std::map<std::string, Json>& a, const std::map<std::string, Json>& b,
                 std::vector<Change>& out) {
  std::map<std::string, std::pair<Json, Json>> merged;
  for (const auto& [k, v] : a) merged[k].first = v;
  for (const auto& [k, v] : b) merged[k].second = v;
  for (const auto& [k, v] : merged) {
    if (v.first != v.second) out.push_back(Change{id, k, v.first, v.second});
  }
}

}  // namespace

StateDigest snapshot_state(const WorldState& state) {
  StateDigest d;
  d.agent = state.agent;
  d.objects.reserve(state.objects.size());
  for (const auto& o : state.objects) d.objects.push_back({o.id, o.type, o.row, o.col, o.slot, o.flags, o.container});
  std::sort(d.objects.begin(), d.objects.end(),
            [](const ObjectRecord& x, const ObjectRecord& y) { return x.id < y.id; });
  d.hash = to_hex(fnv1a64(canonical(d.agent, d.objects)));
  return d;
}

ChangeSet diff_states(const StateDigest& a, const StateDigest& b) {
  ChangeSet cs;
  diff_fields(-1, fields_of(a.agent), fields_of(b.agent), cs.changes);
  std::map<int, const ObjectRecord*> left, right;
  for (const auto& o : a.objects) left[o.id] = &o;
  for (const auto& o : b.objects) right[o.id] = &o;
  std::map<int, bool> ids;
  for (const auto& [id, _] : left) ids[id] = true;
  for (const auto& [id, _] : right) ids[id] = true;
  for (const auto& [id, _] : ids) {
    auto l = left.count(id) ? fields_of(*left[id]) : std::map<std::string, Json>{};
    auto r = right.count(id) ? fields_of(*right[id]) : std::map<std::string, Json>{};
    diff_fields(id, l, r, cs.changes);
  }
  return cs;
}

Json to_json(const StateDigest& d) {
  Json j;
  j["agent"] = pose_json(d.agent);
  j["objects"] = Json::array();
  for (const auto& o : d.objects) j["objects"].push_back(record_json(o));
  j["hash"] = d.hash;
  return j;
}

StateDigest digest_from_json(const Json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path, "expected a state digest object");
  StateDigest d;
  try {
    const Json& a = require(j, "agent", path);
    d.agent.row = a.at("row").get<int>();
    d.agent.col = a.at("col").get<int>();
    d.agent.heading = heading_from_string(a.at("heading").get<std::string>());
    d.agent.pan = a.at("pan").get<int>();
    const Json& objects = require(j, "objects", path);
    for (const auto& oj : objects) {
      ObjectRecord o;
      o.id = oj.at("id").get<int>();
      o.type = oj.at("type").get<std::string>();
      o.row = oj.at("row").get<int>();
      o.col = oj.at("col").get<int>();
      o.slot = oj.at("slot").get<int>();
      o.flags = flags_from_names(oj.at("flags").get<std::vector<std::string>>());
      if (!oj.at("container").is_null()) o.container = oj.at("container").get<int>();
      d.objects.push_back(std::move(o));
    }
    d.hash = require(j, "hash", path).get<std::string>();
  } catch (const SchemaError&) {
    throw;
  } catch (const std::exception& e) {
    throw SchemaError(path, e.what());
  }
  if (d.hash != to_hex(fnv1a64(canonical(d.agent, d.objects)))) throw SchemaError(path + ".hash", "hash does not match content");
  return d;
}

Json to_json(const ChangeSet& c) {
  Json j = Json::array();
  for (const auto& ch : c.changes) {
    j.push_back(Json{{"object", ch.object_id}, {"field", ch.field}, {"before", ch.before}, {"after", ch.after}});
  }
  return j;
}

}  // namespace edh::worldsim
