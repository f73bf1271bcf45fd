//! The bundled rank-1 toy target, compiled in so pipelines can run without
//! a data directory. The same files live under `fixtures/toy/`.

use crate::io::{parse_atoms, parse_closed, parse_open, parse_target, AtomsFile, IoError, TargetFile};
use crate::wdvv::{ClosedGWTable, OpenInvariantTable, YPairingData};

pub const TOY_TARGET: &str = include_str!("../../../fixtures/toy/target.toml");
pub const TOY_ATOMS: &str = include_str!("../../../fixtures/toy/atoms.toml");
pub const TOY_CLOSED: &str = include_str!("../../../fixtures/toy/closed.toml");
pub const TOY_SEEDS: &str = include_str!("../../../fixtures/toy/seeds.toml");
pub const TOY_PLANTED: &str = include_str!("../../../fixtures/toy/planted.toml");

#[derive(Clone, Debug)]
pub struct Toy {
    pub target: TargetFile,
    pub atoms: AtomsFile,
    pub closed: ClosedGWTable,
    pub y_pairing: Option<YPairingData>,
    pub seeds: OpenInvariantTable,
    pub planted: OpenInvariantTable,
}

pub fn toy() -> Result<Toy, IoError> {
    let target = parse_target(TOY_TARGET)?;
    let w = target.wdvv()?.clone();
    let atoms = parse_atoms(TOY_ATOMS)?;
    let (closed, y_pairing) = parse_closed(TOY_CLOSED, &w.model)?;
    let seeds = parse_open(TOY_SEEDS, &w)?;
    let planted = parse_open(TOY_PLANTED, &w)?;
    Ok(Toy { target, atoms, closed, y_pairing, seeds, planted })
}
