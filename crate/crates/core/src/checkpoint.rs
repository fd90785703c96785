//! Binary snapshots of a propagation.
//!
//! Layout, all little-endian:
//!
//! | bytes | content |
//! |---|---|
//! | 8 | magic `HDIRACCK` |
//! | 4 | format version (u32) |
//! | 4 | number of axes `d` (u32) |
//! | 8 d | basis functions per axis (u64) |
//! | 8 | spinor components (u64) |
//! | 32 | SHA-256 of all grid node coordinates |
//! | 8 | time (f64, a.u.) |
//! | 8 | completed steps (u64) |
//! | 8 | coefficient count `n` (u64) |
//! | 16 n | coefficients, real then imaginary part (f64) |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::grid_basis::Grid1D;
use crate::linalg::kron::KroneckerOverlap;
use crate::propagation::{PropagationResult, TimeGrid};
use crate::tensor::{propagate_tensor, TensorHamiltonian, TensorRunOptions};
use crate::{Error, Result};

pub const MAGIC: [u8; 8] = *b"HDIRACCK";
pub const VERSION: u32 = 1;

/// Identifies the basis a coefficient vector belongs to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridDescriptor {
    pub dims: Vec<usize>,
    pub components: usize,
    pub digest: [u8; 32],
}

impl GridDescriptor {
    pub fn new(grids: &[&Grid1D], components: usize) -> Self {
        let mut h = Sha256::new();
        for g in grids {
            h.update((g.nodes().len() as u64).to_le_bytes());
            for x in g.nodes() {
                h.update(x.to_le_bytes());
            }
        }
        Self {
            dims: grids.iter().map(|g| g.basis_len()).collect(),
            components,
            digest: h.finalize().into(),
        }
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product::<usize>() * self.components
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub grid: GridDescriptor,
    pub time: f64,
    pub step: u64,
    pub coeffs: Vec<Complex64>,
}

impl Checkpoint {
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        if self.coeffs.len() != self.grid.len() {
            return Err(Error::LengthMismatch {
                expected: self.grid.len(),
                actual: self.coeffs.len(),
            });
        }
        w.write_all(&MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.grid.dims.len() as u32).to_le_bytes())?;
        for &d in &self.grid.dims {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        w.write_all(&(self.grid.components as u64).to_le_bytes())?;
        w.write_all(&self.grid.digest)?;
        w.write_all(&self.time.to_le_bytes())?;
        w.write_all(&self.step.to_le_bytes())?;
        w.write_all(&(self.coeffs.len() as u64).to_le_bytes())?;
        for c in &self.coeffs {
            w.write_all(&c.re.to_le_bytes())?;
            w.write_all(&c.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if magic != MAGIC {
            return Err(Error::Checkpoint("not a checkpoint file".into()));
        }
        let version = read_u32(r)?;
        if version != VERSION {
            return Err(Error::Checkpoint(format!(
                "format version {version}, expected {VERSION}"
            )));
        }
        let ndims = read_u32(r)? as usize;
        if ndims == 0 || ndims > 3 {
            return Err(Error::Checkpoint(format!("{ndims} axes")));
        }
        let dims = (0..ndims).map(|_| read_u64(r).map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let components = read_u64(r)? as usize;
        let mut digest = [0u8; 32];
        r.read_exact(&mut digest)?;
        let time = f64::from_le_bytes(read_array(r)?);
        let step = read_u64(r)?;
        let n = read_u64(r)? as usize;
        let grid = GridDescriptor {
            dims,
            components,
            digest,
        };
        if n != grid.len() {
            return Err(Error::Checkpoint(format!(
                "payload of {n} coefficients for a basis of {}",
                grid.len()
            )));
        }
        let mut coeffs = Vec::with_capacity(n);
        for _ in 0..n {
            let re = f64::from_le_bytes(read_array(r)?);
            let im = f64::from_le_bytes(read_array(r)?);
            coeffs.push(Complex64::new(re, im));
        }
        Ok(Self {
            grid,
            time,
            step,
            coeffs,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(&mut BufReader::new(File::open(path)?))
    }

    /// Loads `path` and refuses it unless it was written for `expected`.
    pub fn restore(path: &Path, expected: &GridDescriptor) -> Result<Self> {
        let c = Self::load(path)?;
        if &c.grid != expected {
            return Err(Error::Checkpoint(format!(
                "grid mismatch: file has {:?} x {}, run uses {:?} x {}",
                c.grid.dims, c.grid.components, expected.dims, expected.components
            )));
        }
        Ok(c)
    }
}

/// Where and how often a run writes checkpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckpointPolicy {
    pub path: PathBuf,
    /// Write after every this many steps and after the last one.
    pub every: usize,
    /// Stop with [`Error::Halted`] once this step is written.
    pub halt_after: Option<usize>,
}

/// [`propagate_tensor`] that can start from `resume` and writes checkpoints
/// according to `policy`.
#[allow(clippy::too_many_arguments)]
pub fn propagate_checkpointed<H>(
    grid: &GridDescriptor,
    overlap: &KroneckerOverlap,
    hamiltonian_at: H,
    tg: &TimeGrid,
    initial: &[Complex64],
    opts: &TensorRunOptions,
    resume: Option<&Checkpoint>,
    policy: Option<&CheckpointPolicy>,
) -> Result<PropagationResult>
where
    H: Fn(f64) -> Result<TensorHamiltonian>,
{
    let (start, c0) = match resume {
        Some(ck) => {
            if &ck.grid != grid {
                return Err(Error::Checkpoint("checkpoint grid does not match the run".into()));
            }
            let step = ck.step as usize;
            if step > tg.steps || tg.time(step).to_bits() != ck.time.to_bits() {
                return Err(Error::Checkpoint(format!(
                    "checkpoint at step {step}, t = {} is not on the time grid",
                    ck.time
                )));
            }
            (step, ck.coeffs.clone())
        }
        None => (0, initial.to_vec()),
    };
    let mut on_step = |step: usize, c: &[Complex64]| -> Result<()> {
        let Some(p) = policy else { return Ok(()) };
        let halt = p.halt_after == Some(step);
        if halt || step == tg.steps || (p.every > 0 && step % p.every == 0) {
            Checkpoint {
                grid: grid.clone(),
                time: tg.time(step),
                step: step as u64,
                coeffs: c.to_vec(),
            }
            .save(&p.path)?;
        }
        if halt {
            return Err(Error::Halted { step });
        }
        Ok(())
    };
    propagate_tensor(overlap, hamiltonian_at, tg, start, c0, opts, &mut on_step)
}

fn read_array<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    Ok(u32::from_le_bytes(read_array(r)?))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    Ok(u64::from_le_bytes(read_array(r)?))
}
