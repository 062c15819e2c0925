#include "edh/util/json_io.hpp"

#include <fstream>

#include "edh/util/error.hpp"

namespace edh {

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(path, e.what());
  }
}

void write_json_file(const std::string& path, const Json& doc) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << doc.dump(2) << '\n';
}

const Json& require(const Json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) throw SchemaError(path.empty() ? key : path + "." + key, "missing required field");
  return obj.at(key);
}

}  // namespace edh
