#include "uuis/context.hpp"

namespace uuis {

void Context::record_error(std::string_view severity, std::string_view message,
                           std::string_view operation, const nlohmann::json& payload) noexcept {
  try {
    store_.transact([&](Transaction& txn) {
      ErrorRecord rec;
      rec.error_id = txn.next(Sequence::Error);
      rec.log_time = txn.now();
      rec.severity = std::string(severity);
      rec.message = std::string(message).substr(0, 255);
      rec.context = nlohmann::json{{"operation", operation}, {"payload", payload}}.dump();
      txn.put(rec);
      txn.log(std::nullopt, std::nullopt, event::Create,
              "error " + std::to_string(rec.error_id) + " " + std::string(operation));
    });
  } catch (...) {
  }
}

}  // namespace uuis
