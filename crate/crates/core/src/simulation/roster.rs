use serde::{Deserialize, Serialize};

use crate::error::{QdcError, Result};

/// Sender plus a partition of receiver slots `1..=N` into parties.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartyRoster {
    sender: String,
    receivers: Vec<String>,
    /// `grouping[p]` lists the slots held by party `receivers[p]`.
    grouping: Vec<Vec<usize>>,
}

impl PartyRoster {
    /// One receiver party per slot, named `receiver-1`, `receiver-2`, ….
    pub fn one_per_slot(n: usize) -> Self {
        Self {
            sender: "sender".into(),
            receivers: (1..=n).map(|i| format!("receiver-{i}")).collect(),
            grouping: (1..=n).map(|i| vec![i]).collect(),
        }
    }

    /// A single receiver holding every particle.
    pub fn single_party(n: usize) -> Self {
        Self {
            sender: "sender".into(),
            receivers: vec!["receiver".into()],
            grouping: vec![(1..=n).collect()],
        }
    }

    /// Parties named `party-1`, `party-2`, … holding the listed slots.
    pub fn from_groups(n: usize, groups: Vec<Vec<usize>>) -> Result<Self> {
        let roster = Self {
            sender: "sender".into(),
            receivers: (1..=groups.len()).map(|i| format!("party-{i}")).collect(),
            grouping: groups,
        };
        roster.validate(n)?;
        Ok(roster)
    }

    /// Checks that the grouping covers `1..=n` exactly once.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.receivers.len() != self.grouping.len() {
            return Err(QdcError::Argument(format!(
                "{} receiver names for {} groups",
                self.receivers.len(),
                self.grouping.len()
            )));
        }
        let mut seen = vec![false; n + 1];
        for (p, group) in self.grouping.iter().enumerate() {
            if group.is_empty() {
                return Err(QdcError::Argument(format!("party {p} holds no slots")));
            }
            for &slot in group {
                if slot == 0 || slot > n {
                    return Err(QdcError::Argument(format!("slot {slot} outside 1..={n}")));
                }
                if std::mem::replace(&mut seen[slot], true) {
                    return Err(QdcError::Argument(format!("slot {slot} assigned twice")));
                }
            }
        }
        if let Some(missing) = (1..=n).find(|&s| !seen[s]) {
            return Err(QdcError::Argument(format!("slot {missing} is unassigned")));
        }
        Ok(())
    }

    pub fn sender(&self) -> &str {
        &self.sender
    }

    pub fn receivers(&self) -> &[String] {
        &self.receivers
    }

    pub fn grouping(&self) -> &[Vec<usize>] {
        &self.grouping
    }

    pub fn party_count(&self) -> usize {
        self.grouping.len()
    }

    /// Index of the party holding `slot`.
    pub fn party_of(&self, slot: usize) -> Option<usize> {
        self.grouping.iter().position(|g| g.contains(&slot))
    }

    pub fn party_name_of(&self, slot: usize) -> Option<&str> {
        self.party_of(slot).map(|p| self.receivers[p].as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partitions() {
        assert!(PartyRoster::one_per_slot(3).validate(3).is_ok());
        assert!(PartyRoster::single_party(3).validate(3).is_ok());
        assert!(PartyRoster::from_groups(3, vec![vec![1, 3], vec![2]]).is_ok());
        assert!(PartyRoster::from_groups(3, vec![vec![1, 3]]).is_err());
        assert!(PartyRoster::from_groups(3, vec![vec![1, 3], vec![2, 3]]).is_err());
        assert!(PartyRoster::from_groups(3, vec![vec![1, 2, 3], vec![]]).is_err());
        assert!(PartyRoster::from_groups(2, vec![vec![1, 2, 3]]).is_err());
        let r = PartyRoster::from_groups(3, vec![vec![1, 3], vec![2]]).unwrap();
        assert_eq!(r.party_of(3), Some(0));
        assert_eq!(r.party_name_of(2), Some("party-2"));
    }
}
