use std::fmt;

use crate::types::DetectionScheme;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarization {
    H,
    V,
}

/// Temporal Schmidt index relative to the undelayed wavepacket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Temporal {
    Matched,
    Orthogonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Channel {
    One,
    Two,
}

impl Channel {
    /// Polarization routed to this channel by the output splitter.
    pub fn polarization(&self) -> Polarization {
        match self {
            Channel::One => Polarization::H,
            Channel::Two => Polarization::V,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Spatial {
    /// Inside the interferometer, before the output polarizing splitter.
    Arm,
    /// Output port of a channel's splitter tree; port 0 is the fiber input.
    Output { channel: Channel, port: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mode {
    pub spatial: Spatial,
    pub polarization: Polarization,
    pub temporal: Temporal,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = match self.temporal {
            Temporal::Matched => "m",
            Temporal::Orthogonal => "o",
        };
        match self.spatial {
            Spatial::Arm => write!(f, "arm.{:?}.{t}", self.polarization),
            Spatial::Output { channel, port } => write!(f, "ch{}.{port}.{t}", if channel == Channel::One { 1 } else { 2 }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TemporalModes {
    /// Matched mode only; exact at zero delay (`I = 1`).
    Single,
    /// Matched plus orthogonal remainder; exact for any `I`.
    Pair,
}

impl TemporalModes {
    pub fn indices(&self) -> &'static [Temporal] {
        match self {
            TemporalModes::Single => &[Temporal::Matched],
            TemporalModes::Pair => &[Temporal::Matched, Temporal::Orthogonal],
        }
    }
}

/// Fixed mode ordering shared by the Fock and Gaussian engines.
///
/// Order: interferometer arms `H` then `V`, then channel 1 ports, then
/// channel 2 ports; within each spatial mode the matched temporal mode comes
/// before the orthogonal one. A channel without detectors keeps a single
/// undetected port.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeLayout {
    modes: Vec<Mode>,
    ports: [usize; 2],
    temporal: TemporalModes,
}

impl ModeLayout {
    pub fn for_scheme(scheme: DetectionScheme, temporal: TemporalModes) -> Self {
        let ports = [scheme.m.max(1) as usize, scheme.n.max(1) as usize];
        let mut modes = Vec::new();
        for pol in [Polarization::H, Polarization::V] {
            for &t in temporal.indices() {
                modes.push(Mode { spatial: Spatial::Arm, polarization: pol, temporal: t });
            }
        }
        for (ci, channel) in [Channel::One, Channel::Two].into_iter().enumerate() {
            for port in 0..ports[ci] {
                for &t in temporal.indices() {
                    modes.push(Mode {
                        spatial: Spatial::Output { channel, port },
                        polarization: channel.polarization(),
                        temporal: t,
                    });
                }
            }
        }
        Self { modes, ports, temporal }
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn temporal(&self) -> TemporalModes {
        self.temporal
    }

    pub fn ports(&self, channel: Channel) -> usize {
        match channel {
            Channel::One => self.ports[0],
            Channel::Two => self.ports[1],
        }
    }

    fn per_spatial(&self) -> usize {
        self.temporal.indices().len()
    }

    fn temporal_offset(t: Temporal) -> usize {
        match t {
            Temporal::Matched => 0,
            Temporal::Orthogonal => 1,
        }
    }

    /// Index of an arm mode; `None` for the orthogonal mode of a single-mode layout.
    pub fn arm(&self, pol: Polarization, t: Temporal) -> Option<usize> {
        let off = Self::temporal_offset(t);
        (off < self.per_spatial()).then(|| {
            let p = match pol {
                Polarization::H => 0,
                Polarization::V => 1,
            };
            p * self.per_spatial() + off
        })
    }

    pub fn output(&self, channel: Channel, port: usize, t: Temporal) -> Option<usize> {
        let off = Self::temporal_offset(t);
        if off >= self.per_spatial() || port >= self.ports(channel) {
            return None;
        }
        let spatial = 2 + match channel {
            Channel::One => port,
            Channel::Two => self.ports[0] + port,
        };
        Some(spatial * self.per_spatial() + off)
    }

    /// All temporal modes seen by one output port's detector.
    pub fn detector_modes(&self, channel: Channel, port: usize) -> Vec<usize> {
        self.temporal.indices().iter().filter_map(|&t| self.output(channel, port, t)).collect()
    }

    /// Detector ports of a scheme: the first `m` ports of channel 1 followed
    /// by the first `n` of channel 2.
    pub fn detectors(&self, scheme: DetectionScheme) -> Option<Vec<(Channel, usize)>> {
        if scheme.m as usize > self.ports[0] || scheme.n as usize > self.ports[1] {
            return None;
        }
        Some(
            (0..scheme.m as usize)
                .map(|p| (Channel::One, p))
                .chain((0..scheme.n as usize).map(|p| (Channel::Two, p)))
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_is_documented_order() {
        let l = ModeLayout::for_scheme(DetectionScheme::new(2, 0), TemporalModes::Pair);
        let names: Vec<String> = l.modes().iter().map(|m| m.to_string()).collect();
        assert_eq!(
            names,
            ["arm.H.m", "arm.H.o", "arm.V.m", "arm.V.o", "ch1.0.m", "ch1.0.o", "ch1.1.m", "ch1.1.o", "ch2.0.m", "ch2.0.o"]
        );
        for (i, m) in l.modes().iter().enumerate() {
            let idx = match m.spatial {
                Spatial::Arm => l.arm(m.polarization, m.temporal),
                Spatial::Output { channel, port } => l.output(channel, port, m.temporal),
            };
            assert_eq!(idx, Some(i));
        }
    }

    #[test]
    fn single_temporal_layout() {
        let l = ModeLayout::for_scheme(DetectionScheme::new(3, 3), TemporalModes::Single);
        assert_eq!(l.len(), 2 + 6);
        assert_eq!(l.arm(Polarization::V, Temporal::Orthogonal), None);
        assert_eq!(l.detector_modes(Channel::Two, 2), vec![7]);
    }

    #[test]
    fn detectors_respect_tree_width() {
        let l = ModeLayout::for_scheme(DetectionScheme::new(1, 1), TemporalModes::Pair);
        assert!(l.detectors(DetectionScheme::new(2, 0)).is_none());
        assert_eq!(l.detectors(DetectionScheme::new(1, 1)).unwrap().len(), 2);
    }
}
