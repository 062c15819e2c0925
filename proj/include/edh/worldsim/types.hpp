#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "edh/util/json_io.hpp"

namespace edh::worldsim {

enum class Heading : int { North = 0, East = 1, South = 2, West = 3 };

enum class ActionKind { Navigation, Interaction, Dialog, Stop };

enum class StepOutcome { Ok, NoopBlocked, FailedPrecondition };

std::string_view to_string(Heading h);
Heading heading_from_string(std::string_view s);
std::string_view to_string(ActionKind k);
std::string_view to_string(StepOutcome o);

// Object state flags, stored as a bit set.
enum Flag : std::uint8_t {
  kSliced = 1 << 0,
  kOpen = 1 << 1,
  kToggledOn = 1 << 2,
  kFilled = 1 << 3,
  kDirty = 1 << 4,
  kHeldByAgent = 1 << 5,
};
using FlagSet = std::uint8_t;

inline constexpr std::array<Flag, 6> kAllFlags = {kSliced, kOpen, kToggledOn, kFilled, kDirty, kHeldByAgent};

std::string_view flag_name(Flag f);
std::optional<Flag> flag_from_name(std::string_view name);
std::vector<std::string> flag_names(FlagSet flags);
FlagSet flags_from_names(const std::vector<std::string>& names);

struct ActionDef {
  std::string name;
  ActionKind kind;
  bool requires_object;
};

// Fixed action catalogue: six navigation actions, eight interactions, the
// dialog "Text" action and "Stop".
const std::vector<ActionDef>& action_catalog();
// nullptr for unknown names.
const ActionDef* find_action(std::string_view name);

// Object types the world knows about, in canonical order.
const std::vector<std::string>& object_types();
// -1 for unknown types.
int object_type_index(std::string_view type);

// An action plus its optional object-type argument.
struct ActionRef {
  std::string action;
  std::optional<std::string> object;

  bool operator==(const ActionRef&) const = default;
  auto operator<=>(const ActionRef&) const = default;
};

std::string to_string(const ActionRef& a);
Json to_json(const ActionRef& a);
ActionRef action_ref_from_json(const Json& j, const std::string& path);

// Lowercase snake_case symbol: "Turn Left" -> "turn_left",
// "CoffeeMachine" -> "coffee_machine".
std::string to_token(std::string_view symbol);

bool is_navigation(const ActionRef& a);
bool is_interaction(const ActionRef& a);

}  // namespace edh::worldsim
