// Writes the synthetic fixture datasets and their run configs into a directory.

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pcdrift/synthetic.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Generate the synthetic fixture price series"};
    std::string out_dir = "data";
    app.add_option("dir", out_dir, "Output directory");
    CLI11_PARSE(app, argc, argv);

    namespace syn = pcdrift::synthetic;
    try {
        std::filesystem::create_directories(out_dir);
        const std::filesystem::path dir(out_dir);
        syn::write_csv(syn::to_levels(syn::one_factor()), (dir / "one_factor.csv").string());
        syn::write_csv(syn::to_levels(syn::two_regime()), (dir / "two_regime.csv").string());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
