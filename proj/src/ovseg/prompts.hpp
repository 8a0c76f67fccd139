#pragma once

#include <string_view>

// Prompt texts sent to the language/vision services. Each task id carries a
// version; bump it whenever the wording changes so recorded replay logs stay
// attributable.
namespace ovseg::prompts {

inline constexpr std::string_view kStructureTask = "structure_query/v1";
inline constexpr std::string_view kStructureSystem =
    "You turn a request to find one object in a 3D indoor scene into JSON. Schema: "
    "{\"main\": {\"name\": string, \"attributes\": [string]}, \"references\": [string], "
    "\"orientation\": null | {\"anchor\": string, \"tokens\": [\"front\"|\"back\"|\"left\"|\"right\"|\"facing\"]}}. "
    "\"main\" is the object to find, \"references\" are other objects the request mentions, and "
    "\"orientation\" is set only when the request depends on which way an object faces. "
    "Reply with the JSON object only.";
inline constexpr std::string_view kStructureUserPrefix = "Query: ";

inline constexpr std::string_view kVerifyTask = "verify/v1";
// {} is replaced by the object name.
inline constexpr std::string_view kVerifyQuestion = "Is there a {} in this image region? Answer yes or no.";

inline constexpr std::string_view kOrientationTask = "orientation/v1";
inline constexpr std::string_view kOrientationSystem =
    "The attached images are numbered tiles laid out in a grid of 2 rows and 4 columns. Tile i shows one object "
    "seen from the i-th direction around it; tiles marked empty have no view. Reply with the tile index only.";

inline constexpr std::string_view kFinalTask = "final/v1";
inline constexpr std::string_view kFinalSystem =
    "You pick the object a query refers to. Coordinates are meters in a z-up world frame; yaw is the direction, "
    "in radians counter-clockwise from +x, that an object's front faces. Reply with the candidate index only.";

}  // namespace ovseg::prompts
