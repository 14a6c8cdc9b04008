// Walks one hidden state through three interactions, then shows what the
// cleaning defense does to it.

#include <iostream>
#include <string>

#include "imem/imem.hpp"

int main() {
  const imem::EngineConfig engine;
  const char* turns[] = {
      "Our bakery posted a net loss this quarter.",
      "Suppliers have started a vendor refusal and we saw a liquidity drain.",
      "We also face a tax lien, a court ruling, missed wages, a term "
      "violation and a revolving facility cut."};

  std::string carried;
  for (const char* user : turns) {
    const auto r = imem::process(carried + "\n\n" + user, engine);
    std::cout << "observed " << r.observed.to_string() << "  merged "
              << r.merged.to_string() << (r.activated ? "  ACTIVATED" : "")
              << '\n';
    carried = r.output;
  }

  const auto cleaned = imem::clean(carried);
  std::cout << "after clean: " << imem::decode_state(cleaned).describe() << '\n';
}
