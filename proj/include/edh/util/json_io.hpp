#pragma once

#include <string>

#include <json.hpp>

namespace edh {

using Json = nlohmann::json;

Json read_json_file(const std::string& path);

// Writes `doc` pretty-printed with a trailing newline. Output is a pure
// function of the document, so identical documents give identical bytes.
void write_json_file(const std::string& path, const Json& doc);

// Fetches a required member or throws SchemaError naming `path`.
const Json& require(const Json& obj, const std::string& key, const std::string& path);

}  // namespace edh
