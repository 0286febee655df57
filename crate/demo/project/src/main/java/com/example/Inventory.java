package com.example;

import java.util.LinkedHashMap;
import java.util.Map;

public class Inventory {
    private final Map<String, Integer> stock = new LinkedHashMap<>();

    public void add(String item, int quantity) {
        if (quantity <= 0) {
            throw new IllegalArgumentException("quantity must be positive");
        }
        stock.merge(item, quantity, Integer::sum);
    }

    public boolean remove(String item, int quantity) {
        Integer have = stock.get(item);
        if (have == null || have < quantity) {
            return false;
        }
        if (have == quantity) {
            stock.remove(item);
        } else {
            stock.put(item, have - quantity);
        }
        return true;
    }

    public int quantityOf(String item) {
        return stock.getOrDefault(item, 0);
    }

    public int distinctItems() {
        return stock.size();
    }
}
