//! Flattened penalty description shared by the objectives, the KKT checks and the solvers.
//!
//! Coefficients are addressed as cells of a row-major `p × q` array (`q = 1` for Model 2).
//! Every cell carries its own weighted lasso level and the blocks containing it; every
//! block carries its weighted group level.

use crate::data::{BlockGroupStructure, GroupStructure, PenaltyWeights, SolverConfig};
use crate::error::{Error, Result};
use crate::scalar::{weight_pow, Scalar};

#[derive(Debug, Clone)]
pub(crate) struct CellPenalty<F> {
    pub q: usize,
    /// `lambda_feature * w_j^alpha` per cell.
    pub l1: Vec<F>,
    /// Cell indices per block.
    pub blocks: Vec<Vec<usize>>,
    /// `lambda_group_g * gw_g^alpha` per block.
    pub l2: Vec<F>,
    /// Blocks containing each cell.
    pub cell_blocks: Vec<Vec<usize>>,
}

fn check_feature_weights<F: Scalar>(weights: &PenaltyWeights<F>, p: usize) -> Result<()> {
    if weights.feature_weights.len() != p {
        return Err(Error::dims(format!(
            "{} feature weights for {p} predictors",
            weights.feature_weights.len()
        )));
    }
    weights.validate()
}

impl<F: Scalar> CellPenalty<F> {
    /// Model 1: cells `(j, k)` of B, blocks from an arbitrary block structure. A block tied
    /// to predictor group `a` uses group weight `a`; untied blocks use weight one.
    pub fn model1(
        blocks: &BlockGroupStructure,
        weights: &PenaltyWeights<F>,
        cfg: &SolverConfig<F>,
    ) -> Result<Self> {
        let (p, q) = (blocks.p(), blocks.q());
        check_feature_weights(weights, p)?;
        cfg.validate(blocks.len())?;
        let mut l1 = Vec::with_capacity(p * q);
        for j in 0..p {
            let v = cfg.lambda_feature * weight_pow(weights.feature_weights[j], cfg.alpha);
            l1.extend(std::iter::repeat_n(v, q));
        }
        let mut cell_blocks = vec![Vec::new(); p * q];
        let mut cells = Vec::with_capacity(blocks.len());
        let mut l2 = Vec::with_capacity(blocks.len());
        for (g, b) in blocks.blocks().iter().enumerate() {
            let gw = match b.x_group {
                Some(a) => *weights.group_weights.get(a).ok_or_else(|| {
                    Error::dims(format!(
                        "block `{}` refers to predictor group {a}, only {} group weights",
                        b.name,
                        weights.group_weights.len()
                    ))
                })?,
                None => F::one(),
            };
            l2.push(cfg.lambda_group.get(g) * weight_pow(gw, cfg.alpha));
            let idx: Vec<usize> = b.cells.iter().map(|&(j, k)| j * q + k).collect();
            for &c in &idx {
                cell_blocks[c].push(g);
            }
            cells.push(idx);
        }
        Ok(Self { q, l1, blocks: cells, l2, cell_blocks })
    }

    /// Model 2: one cell per predictor, blocks are the predictor groups.
    pub fn model2(groups: &GroupStructure, weights: &PenaltyWeights<F>, cfg: &SolverConfig<F>) -> Result<Self> {
        let p = groups.size();
        check_feature_weights(weights, p)?;
        cfg.validate(groups.len())?;
        if weights.group_weights.len() != groups.len() {
            return Err(Error::dims(format!(
                "{} group weights for {} groups",
                weights.group_weights.len(),
                groups.len()
            )));
        }
        let l1 = weights
            .feature_weights
            .iter()
            .map(|&w| cfg.lambda_feature * weight_pow(w, cfg.alpha))
            .collect();
        let mut cell_blocks = vec![Vec::new(); p];
        let mut blocks = Vec::with_capacity(groups.len());
        let mut l2 = Vec::with_capacity(groups.len());
        for (g, grp) in groups.groups().iter().enumerate() {
            l2.push(cfg.lambda_group.get(g) * weight_pow(weights.group_weights[g], cfg.alpha));
            for &j in &grp.members {
                cell_blocks[j].push(g);
            }
            blocks.push(grp.members.clone());
        }
        Ok(Self { q: 1, l1, blocks, l2, cell_blocks })
    }

    pub fn n_cells(&self) -> usize {
        self.l1.len()
    }

    pub fn block_sq_norm(&self, coef: &[F], g: usize) -> F {
        self.blocks[g].iter().map(|&c| coef[c] * coef[c]).sum()
    }

    pub fn value(&self, coef: &[F]) -> F {
        let lasso: F = self.l1.iter().zip(coef).map(|(&l, &b)| l * b.abs()).sum();
        let group: F = (0..self.blocks.len())
            .filter(|&g| self.l2[g] != F::zero())
            .map(|g| self.l2[g] * self.block_sq_norm(coef, g).sqrt())
            .sum();
        lasso + group
    }
}
