#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "setgan/core/errors.hpp"
#include "setgan/latent.hpp"
#include "setgan/nets.hpp"
#include "setgan/train.hpp"

namespace setgan {

/// Everything a run needs, serializable as one JSON document. The generator's
/// latent_dim and the discriminator's in_channels are derived, never stored,
/// so a config can't go internally inconsistent.
struct RunConfig {
    std::uint64_t seed = 1234;
    std::string dataset;
    std::string run_dir = "runs/default";

    LatentLayout layout{60, 40, 3};
    std::size_t image_side = 64;
    std::size_t gen_base_maps = 64;
    std::size_t out_channels = 1;
    std::size_t disc_base_maps = 64;

    TrainConfig train;

    std::size_t eval_bins = 8;
    std::size_t eval_samples_per_bin = 200;
    double eval_p = 0.01;

    GeneratorSpec gen_spec() const {
        GeneratorSpec g;
        g.latent_dim = layout.total_dim();
        g.image_side = image_side;
        g.base_maps = gen_base_maps;
        g.out_channels = out_channels;
        return g;
    }

    DiscriminatorSpec disc_spec() const {
        DiscriminatorSpec d;
        d.in_channels = out_channels * layout.set_size;
        d.image_side = image_side;
        d.base_maps = disc_base_maps;
        return d;
    }

    /// Fills the derived fields and checks internal consistency.
    RunConfig& normalize() {
        train.seed = seed;
        train.set_size = layout.set_size;
        gen_spec().validate();
        disc_spec().validate();
        train.validate();
        if (!(eval_p > 0.0 && eval_p <= 0.5))
            throw std::invalid_argument("RunConfig: eval.p must be in (0, 0.5]");
        if (eval_bins < 3) throw std::invalid_argument("RunConfig: eval.n_bins must be >= 3");
        return *this;
    }

    nlohmann::json to_json() const {
        return {
            {"seed", seed},
            {"dataset", dataset},
            {"run_dir", run_dir},
            {"layout",
             {{"d_content", layout.d_content},
              {"d_motion", layout.d_motion},
              {"set_size", layout.set_size}}},
            {"generator",
             {{"image_side", image_side},
              {"base_maps", gen_base_maps},
              {"out_channels", out_channels}}},
            {"discriminator", {{"base_maps", disc_base_maps}}},
            {"train",
             {{"batch_sets", train.batch_sets},
              {"lr_g", train.lr_g},
              {"lr_d", train.lr_d},
              {"beta1", train.beta1},
              {"beta2", train.beta2},
              {"total_steps", train.total_steps},
              {"d_steps_per_g_step", train.d_steps_per_g_step},
              {"loss_mode", to_string(train.loss_mode)},
              {"checkpoint_every", train.checkpoint_every}}},
            {"eval",
             {{"n_bins", eval_bins}, {"samples_per_bin", eval_samples_per_bin}, {"p", eval_p}}}};
    }

    static RunConfig from_json(const nlohmann::json& j) {
        RunConfig c;
        c.seed = j.at("seed").get<std::uint64_t>();
        c.dataset = j.at("dataset").get<std::string>();
        c.run_dir = j.at("run_dir").get<std::string>();
        const auto& l = j.at("layout");
        c.layout = LatentLayout(l.at("d_content").get<std::size_t>(),
                                l.at("d_motion").get<std::size_t>(),
                                l.at("set_size").get<std::size_t>());
        const auto& g = j.at("generator");
        c.image_side = g.at("image_side").get<std::size_t>();
        c.gen_base_maps = g.at("base_maps").get<std::size_t>();
        c.out_channels = g.at("out_channels").get<std::size_t>();
        c.disc_base_maps = j.at("discriminator").at("base_maps").get<std::size_t>();
        const auto& t = j.at("train");
        c.train.batch_sets = t.at("batch_sets").get<std::size_t>();
        c.train.lr_g = t.at("lr_g").get<double>();
        c.train.lr_d = t.at("lr_d").get<double>();
        c.train.beta1 = t.at("beta1").get<double>();
        c.train.beta2 = t.at("beta2").get<double>();
        c.train.total_steps = t.at("total_steps").get<long>();
        c.train.d_steps_per_g_step = t.at("d_steps_per_g_step").get<int>();
        c.train.loss_mode = loss_mode_from_string(t.at("loss_mode").get<std::string>());
        c.train.checkpoint_every = t.at("checkpoint_every").get<long>();
        const auto& e = j.at("eval");
        c.eval_bins = e.at("n_bins").get<std::size_t>();
        c.eval_samples_per_bin = e.at("samples_per_bin").get<std::size_t>();
        c.eval_p = e.at("p").get<double>();
        c.normalize();
        return c;
    }

    void save(const std::filesystem::path& path) const {
        std::ofstream os(path, std::ios::trunc);
        if (!os) throw DataError("RunConfig::save: cannot open " + path.string());
        os << to_json().dump(2) << '\n';
    }

    static RunConfig load(const std::filesystem::path& path) {
        std::ifstream is(path);
        if (!is) throw DataError("RunConfig::load: cannot open " + path.string());
        nlohmann::json j;
        try {
            is >> j;
        } catch (const nlohmann::json::exception& e) {
            throw DataError("RunConfig::load: malformed config: " + std::string(e.what()));
        }
        return from_json(j);
    }
};

}  // namespace setgan
