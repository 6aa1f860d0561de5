package com.example.notes.test;

import io.appium.java_client.MobileElement;
import io.appium.java_client.android.AndroidDriver;
import org.junit.Test;

public class NoteFlowTest {
    private AndroidDriver<MobileElement> driver;

    @Test
    public void testCreateAndShareNote() {
        // start from the main screen
        driver.findElementById("com.example.notes:id/btn_search").click();
        driver.findElementByXPath("//android.widget.EditText[@content-desc=\"Note title\"]").sendKeys("Groceries");
        driver.findElementById("com.example.notes:id/btn_save").click();
        driver.findElementByXPath("/hierarchy/android.widget.FrameLayout/android.widget.LinearLayout/android.widget.ImageButton[1]").click();
        driver.findElementById("com.example.notes:id/btn_done").click();
    }
}
