use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{FiniteDist, Space};
use crate::scalar::Scalar;
use crate::world::MechanismKernel;

/// The kernels available in one round, keyed by query id.
///
/// Every kernel of a round shares one response space so that a view records
/// the same kind of response whichever query produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct Round<T> {
    kernels: BTreeMap<String, MechanismKernel<T>>,
    responses: Space,
}

impl<T: Scalar> Round<T> {
    pub fn new<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, MechanismKernel<T>)>,
        S: Into<String>,
    {
        let kernels: BTreeMap<String, MechanismKernel<T>> =
            entries.into_iter().map(|(id, k)| (id.into(), k)).collect();
        let first = kernels
            .values()
            .next()
            .ok_or_else(|| Error::InvalidArguments("a round needs at least one query".into()))?;
        let responses = first.responses().clone();
        let inputs = first.channel().input().len();
        for (id, k) in &kernels {
            if k.responses() != &responses {
                return Err(Error::DomainMismatch(format!(
                    "query `{id}` answers over a different response space"
                )));
            }
            if k.channel().input().len() != inputs {
                return Err(Error::DomainMismatch(format!(
                    "query `{id}` has {} input rows, expected {inputs}",
                    k.channel().input().len()
                )));
            }
        }
        Ok(Self { kernels, responses })
    }

    pub fn single(id: impl Into<String>, kernel: MechanismKernel<T>) -> Self {
        Self::new([(id.into(), kernel)]).expect("one kernel is always consistent")
    }

    pub fn responses(&self) -> &Space {
        &self.responses
    }

    pub fn kernel(&self, id: &str) -> Result<&MechanismKernel<T>> {
        self.kernels
            .get(id)
            .ok_or_else(|| Error::UnknownQuery(id.to_string()))
    }

    pub fn queries(&self) -> impl Iterator<Item = (&str, &MechanismKernel<T>)> {
        self.kernels.iter().map(|(id, k)| (id.as_str(), k))
    }

    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }
}

/// Explicit strategy: `(coin, response prefix) → query id`.
///
/// Lookup tries the exact coin, then rules that match every coin, then the
/// round's default.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DecisionTable {
    pub defaults: Vec<String>,
    pub rules: BTreeMap<(Option<usize>, Vec<usize>), String>,
}

impl DecisionTable {
    /// Asks `defaults[i]` in round `i` regardless of the view.
    pub fn fixed<S: Into<String>>(defaults: impl IntoIterator<Item = S>) -> Self {
        Self {
            defaults: defaults.into_iter().map(Into::into).collect(),
            rules: BTreeMap::new(),
        }
    }

    pub fn rule(mut self, coin: Option<usize>, prefix: Vec<usize>, query: impl Into<String>) -> Self {
        self.rules.insert((coin, prefix), query.into());
        self
    }

    fn lookup(&self, coin: usize, prefix: &[usize]) -> Option<&str> {
        let key = prefix.to_vec();
        self.rules
            .get(&(Some(coin), key.clone()))
            .or_else(|| self.rules.get(&(None, key)))
            .or_else(|| self.defaults.get(prefix.len()))
            .map(String::as_str)
    }
}

type StrategyFn = dyn Fn(usize, &[usize]) -> Option<String> + Send + Sync;

#[derive(Clone)]
enum Strategy {
    Table(DecisionTable),
    Custom(Arc<StrategyFn>),
}

/// A coin distribution plus a deterministic choice of the next query from
/// `(coin, responses so far)`.
#[derive(Clone)]
pub struct Analyst<T> {
    coins: FiniteDist<T>,
    strategy: Strategy,
}

impl<T: Scalar> fmt::Debug for Analyst<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.strategy {
            Strategy::Table(t) => format!("table({} rules)", t.rules.len()),
            Strategy::Custom(_) => "custom".to_string(),
        };
        f.debug_struct("Analyst")
            .field("coins", &self.coins)
            .field("strategy", &kind)
            .finish()
    }
}

fn no_coins<T: Scalar>() -> FiniteDist<T> {
    FiniteDist::point(Space::labeled(["-"]).expect("single label"), 0)
}

impl<T: Scalar> Analyst<T> {
    pub fn from_table(table: DecisionTable) -> Self {
        Self {
            coins: no_coins(),
            strategy: Strategy::Table(table),
        }
    }

    /// Asks the same fixed sequence of queries whatever it sees.
    pub fn non_adaptive<S: Into<String>>(queries: impl IntoIterator<Item = S>) -> Self {
        Self::from_table(DecisionTable::fixed(queries))
    }

    pub fn custom(f: impl Fn(usize, &[usize]) -> Option<String> + Send + Sync + 'static) -> Self {
        Self {
            coins: no_coins(),
            strategy: Strategy::Custom(Arc::new(f)),
        }
    }

    pub fn with_coins(mut self, coins: FiniteDist<T>) -> Self {
        self.coins = coins;
        self
    }

    pub fn coins(&self) -> &FiniteDist<T> {
        &self.coins
    }

    pub fn next_query(&self, coin: usize, prefix: &[usize]) -> Result<String> {
        let q = match &self.strategy {
            Strategy::Table(t) => t.lookup(coin, prefix).map(str::to_string),
            Strategy::Custom(f) => f(coin, prefix),
        };
        q.ok_or_else(|| {
            Error::InvalidArguments(format!(
                "strategy has no query for coin {coin} after {} responses",
                prefix.len()
            ))
        })
    }
}

/// One rule of a serialized decision table; labels refer to coin and
/// response labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleSpec {
    #[serde(default)]
    pub coin: Option<String>,
    #[serde(default)]
    pub prefix: Vec<String>,
    pub query: String,
}

/// Serialized analyst as it appears in scenario files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalystSpec {
    #[serde(default)]
    pub coins: Vec<(String, f64)>,
    pub defaults: Vec<String>,
    #[serde(default)]
    pub rules: Vec<RuleSpec>,
}

impl AnalystSpec {
    pub fn build(&self, rounds: &[Round<f64>]) -> Result<Analyst<f64>> {
        let coins = if self.coins.is_empty() {
            no_coins()
        } else {
            let space = Space::labeled(self.coins.iter().map(|(l, _)| l.clone()))
                .ok_or_else(|| Error::InvalidArguments("duplicate coin labels".into()))?;
            FiniteDist::new(space, self.coins.iter().map(|(_, w)| *w).collect())?
        };
        let mut table = DecisionTable::fixed(self.defaults.iter().cloned());
        for rule in &self.rules {
            let coin = match &rule.coin {
                None => None,
                Some(c) => Some(coins.space().index_of(c).ok_or_else(|| {
                    Error::InvalidArguments(format!("unknown coin `{c}`"))
                })?),
            };
            if rule.prefix.len() >= rounds.len() {
                return Err(Error::InvalidArguments(format!(
                    "rule prefix of length {} leaves no round to ask in",
                    rule.prefix.len()
                )));
            }
            let prefix = rule
                .prefix
                .iter()
                .enumerate()
                .map(|(i, label)| {
                    rounds[i].responses().index_of(label).ok_or_else(|| {
                        Error::InvalidArguments(format!("round {i} has no response `{label}`"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            table = table.rule(coin, prefix, rule.query.clone());
        }
        Ok(Analyst::from_table(table).with_coins(coins))
    }
}
