// SPDX-License-Identifier: Apache-2.0
// Regenerates the shared receipt corpus under fixtures/receipts.

#include <iostream>

#include "CLI11.hpp"
#include "pipechain/audit/fixtures.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Write the receipt fixture corpus"};
    std::string out = "fixtures/receipts";
    app.add_option("--out", out, "Output directory");
    CLI11_PARSE(app, argc, argv);

    auto scratch = std::filesystem::temp_directory_path() / "pipechain-fixture-scratch";
    try {
        auto corpus = pipechain::audit::build_receipt_corpus(scratch);
        std::filesystem::remove_all(scratch);
        if (std::filesystem::is_directory(out)) {
            for (const auto& de : std::filesystem::directory_iterator(out)) {
                if (de.path().extension() == ".bin") std::filesystem::remove(de.path());
            }
        }
        pipechain::audit::write_receipt_corpus(corpus, out);
        std::cout << "wrote " << corpus.size() << " receipts to " << out << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::filesystem::remove_all(scratch);
        std::cerr << "gen-receipt-fixtures: " << e.what() << "\n";
        return 1;
    }
}
