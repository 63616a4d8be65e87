#include "bevgrid/point.hpp"

namespace bevgrid {

const std::array<std::string_view, kNumClasses>& class_table() {
  static constexpr std::array<std::string_view, kNumClasses> kNames = {
      "ground", "vegetation",   "building",         "wall", "bridge",   "parking", "rail",
      "traffic road", "street furniture", "car", "footpath", "bike", "water"};
  return kNames;
}

std::string_view class_name(ClassId id) {
  if (!is_class_id(id)) return "unlabeled";
  return class_table()[id];
}

}  // namespace bevgrid
