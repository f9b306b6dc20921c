#pragma once

#include <string>

namespace sevo {

// Which observation-pipeline components and data-protocol rules are active.
struct ProtocolFlags {
    bool overlay = true;
    bool red_light = true;
    bool varied_bg = true;
    bool null_episodes = true;
    bool wrist_camera = false;

    static ProtocolFlags full() { return {}; }
    static ProtocolFlags none() { return {false, false, false, true, false}; }

    // Compact label such as "overlay+red_light+varied_bg" or "baseline".
    std::string label() const;

    friend bool operator==(const ProtocolFlags&, const ProtocolFlags&) = default;
};

} // namespace sevo
