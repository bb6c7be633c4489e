#include "bobj/injection.hpp"

#include "bobj/errors.hpp"

namespace bobj {

std::unique_ptr<bt::Node> TreePool::acquire(const std::shared_ptr<const bt::TreeDef>& def) {
  std::unique_ptr<bt::Node> out;
  auto& free = free_[def->id];
  if (!free.empty()) {
    out = std::move(free.back());
    free.pop_back();
    ++reused_;
  } else {
    out = bt::build(def->root);
    ++built_;
  }
  if (++live_ > high_water_) high_water_ = live_;
  return out;
}

void TreePool::release(const bt::TreeDef& def, std::unique_ptr<bt::Node> root) {
  if (!root) return;
  if (!root->fresh_deep()) {
    throw HardError("released tree '" + def.name + "' still holds state (" +
                    std::string(bt::to_string(root->lifecycle())) + ")");
  }
  --live_;
  free_[def.id].push_back(std::move(root));
}

std::size_t TreePool::pooled() const {
  std::size_t n = 0;
  for (const auto& [id, v] : free_) n += v.size();
  return n;
}

}  // namespace bobj
